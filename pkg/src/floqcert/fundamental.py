"""Bounds ``C_A >= |Phi_A(t) Phi_A(s)^{-1}|`` for the fundamental solution of ``y' = A(t) y``.

The a priori bound is ``exp(2 |A|_inf)``.  The bootstrap refines it by
collocating the fundamental solution ``Phi`` and the adjoint solution
``Psi = Phi^{-T}``, certifying both with the current bound, and taking
``(xi + |Phi_N|_inf) (omega + |Psi_N|_inf)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .cheb import bary_values, coeffs_from_values
from .errors import Diverged
from .ivp import CollocationOperator, certify_batch, matrix_sup_bound, matrix_values

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FundamentalBound:
    """A bound on the fundamental solution together with how it was obtained.

    ``provenance`` is ``"apriori"`` or ``"bootstrap"``; ``iterations`` counts
    bootstrap steps and ``history`` lists every bound computed, starting with
    the a priori one.
    """

    value: float
    provenance: str
    iterations: int = 0
    history: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "provenance": self.provenance,
            "iterations": self.iterations,
            "history": list(self.history),
        }


def _probe(A):
    if callable(A):
        return np.asarray(A(np.array([0.0])))
    return np.asarray(A)


def infer_dimension(A) -> int:
    """Matrix size of a coefficient given as a callable or constant."""
    val = _probe(A)
    return 1 if val.ndim < 2 else val.shape[-1]


def apriori_bound(A, d: int | None = None) -> FundamentalBound:
    """``exp(2 alpha)`` with ``alpha`` an upper bound on ``max_t |A(t)|``."""
    d = infer_dimension(A) if d is None else d
    alpha = matrix_sup_bound(A, d)
    value = math.exp(2.0 * alpha)
    return FundamentalBound(value, "apriori", 0, [value])


def _matrix_poly_sup(P: np.ndarray, rel_slack: float = 1e-4, max_points: int = 2**18) -> float:
    """Upper bound on ``max_t |P(t)|_2`` for a matrix polynomial with node values ``(N+1, d, d)``.

    The spectral norm is sampled on a uniform grid of spacing ``h`` and the
    sampled maximum is raised by ``L h / 2``, where ``L`` bounds ``|P'(t)|_F``
    through the Chebyshev coefficients of ``P'``.  The grid is refined until the
    correction is below ``rel_slack`` times the sampled maximum.
    """
    N = P.shape[0] - 1
    flat = P.reshape(N + 1, -1)
    dcoef = np.polynomial.chebyshev.chebder(coeffs_from_values(flat), axis=0)
    lip = float(np.sqrt(np.sum(np.abs(dcoef).sum(axis=0) ** 2)))
    n = max(2001, 40 * (N + 1) + 1)
    while True:
        t = np.linspace(-1.0, 1.0, n)
        sampled = float(np.linalg.norm(bary_values(P, t), 2, axis=(1, 2)).max())
        corr = lip * (2.0 / (n - 1)) / 2.0
        if corr <= rel_slack * max(sampled, 1e-300) or 2 * n - 1 > max_points:
            return sampled + corr
        n = 2 * n - 1


def _certified_fundamental(A, N: int, d: int, C: float, A_sup: float):
    op = CollocationOperator(A, N, d)
    y0 = np.eye(d, dtype=complex)
    rhs = op.rhs(np.zeros((N, d, d)), y0)
    P = op.node_values(op.solve(rhs))
    out = certify_batch(A, N, d, P, y0, C, A_sup=A_sup)
    xi = float(np.sqrt(np.sum(out["err_sup"] ** 2)))
    return xi, _matrix_poly_sup(P), P


def bootstrap_step(A, N: int, C: float, d: int | None = None, A_sup: float | None = None):
    """One refinement of the bound ``C``.  Returns ``(new_bound, details)``."""
    d = infer_dimension(A) if d is None else d
    if A_sup is None:
        A_sup = matrix_sup_bound(A, d)

    def adjoint(t):
        return -np.swapaxes(matrix_values(A, t, d), -1, -2)

    xi, phi_sup, _ = _certified_fundamental(A, N, d, C, A_sup)
    omega, psi_sup, _ = _certified_fundamental(adjoint, N, d, C, A_sup)
    new = (xi + phi_sup) * (omega + psi_sup)
    return new, {"xi": xi, "omega": omega, "phi_sup": phi_sup, "psi_sup": psi_sup}


def bootstrap_bound(A, N: int, max_iters: int = 8, rel_tol: float = 1e-3,
                    d: int | None = None, initial: float | None = None) -> FundamentalBound:
    """Iterate :func:`bootstrap_step` from the a priori bound.

    Stops when the relative change drops below ``rel_tol`` or after
    ``max_iters`` steps and returns the smallest bound seen.  Raises
    :class:`~floqcert.errors.Diverged` if a step increases the bound more than
    tenfold.
    """
    d = infer_dimension(A) if d is None else d
    A_sup = matrix_sup_bound(A, d)
    C = math.exp(2.0 * A_sup) if initial is None else float(initial)
    history = [C]
    for it in range(1, max_iters + 1):
        new, info = bootstrap_step(A, N, C, d, A_sup)
        log.debug("bootstrap step %d: %.6g (%s)", it, new, info)
        history.append(new)
        if not math.isfinite(new) or new > 10.0 * C:
            raise Diverged(f"bootstrap bound grew from {C:.4g} to {new:.4g}; increase N",
                           history)
        change = abs(new - C) / C
        C = min(C, new)
        if change < rel_tol:
            break
    return FundamentalBound(min(history), "bootstrap", len(history) - 1, history)
