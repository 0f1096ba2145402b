"""Monodromy matrices of linear periodic DDEs with delay equal to the period.

The DDE ``y'(t) = A(t) y(t) + B(t) y(t - 2)`` is posed on [-1, 1] with
2-periodic coefficients.  One period maps the history segment ``f`` to the
solution of ``y' = A y + B f``, ``y(-1) = f(1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from .cheb import ChebPoly, collocation_points
from .errors import EigFailure
from .ivp import CollocationOperator, matrix_sup_bound, matrix_values
from .h1 import POINTWISE_CONSTANT


@dataclass(frozen=True)
class DdeSystem:
    """``y' = A(t) y + B(t) y(t - 2)`` with ``d x d`` coefficient callables."""

    A: object
    B: object
    d: int = 1

    def A_at(self, t):
        return matrix_values(self.A, t, self.d)

    def B_at(self, t):
        return matrix_values(self.B, t, self.d)


def _tie_ranks(x: np.ndarray, tol: float) -> np.ndarray:
    """Rank ``x`` descending, giving values within ``tol`` of their neighbour the same rank."""
    order = np.argsort(-x, kind="stable")
    gaps = np.diff(x[order]) < -tol
    ranks = np.empty(len(x), dtype=int)
    ranks[order] = np.concatenate([[0], np.cumsum(gaps)])
    return ranks


def sort_eigenpairs(lam: np.ndarray, V: np.ndarray | None = None, rtol: float = 1e-12):
    """Order by descending modulus, ties by descending real then imaginary part.

    Moduli and real parts that agree to ``rtol`` relative to the largest
    modulus count as ties, so conjugate pairs come out in a fixed order.
    """
    lam = np.asarray(lam)
    tol = rtol * (np.abs(lam).max() if lam.size else 0.0)
    order = np.lexsort((-lam.imag, _tie_ranks(lam.real, tol), _tie_ranks(np.abs(lam), tol)))
    lam = lam[order]
    return (lam, V[:, order]) if V is not None else (lam, None)


@dataclass(frozen=True, eq=False)
class MonodromyMatrix:
    """Collocation monodromy matrix ``U_N = (hatD - hatM_A)^{-1} hatM_B``."""

    system: DdeSystem
    N: int
    U: np.ndarray
    operator: CollocationOperator = field(repr=False)

    @property
    def d(self) -> int:
        return self.system.d

    @cached_property
    def eigen(self):
        """Eigenvalues and eigenvectors, sorted by descending modulus."""
        try:
            lam, V = sla.eig(self.U)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise EigFailure(str(exc)) from exc
        if not np.all(np.isfinite(lam)):
            raise EigFailure("eigensolver returned non-finite eigenvalues")
        return sort_eigenpairs(lam, V)

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        try:
            lam = sla.eigvals(self.U)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise EigFailure(str(exc)) from exc
        if not np.all(np.isfinite(lam)):
            raise EigFailure("eigensolver returned non-finite eigenvalues")
        return sort_eigenpairs(lam)[0]

    def apply(self, f: ChebPoly) -> ChebPoly:
        """One step of the method of steps applied to ``f``."""
        v = f.values.reshape(-1)
        return ChebPoly(f.grid, (self.U @ v).reshape(self.N + 1, self.d))


def build_hatM_B(system: DdeSystem, N: int) -> np.ndarray:
    grid = collocation_points(N)
    d = system.d
    Bvals = system.B_at(grid.points[:N])
    M = np.zeros((d * (N + 1), d * (N + 1)), dtype=complex)
    for j in range(N):
        M[j * d:(j + 1) * d, j * d:(j + 1) * d] = Bvals[j]
    # last block row picks the history value f(t_0) = f(1)
    M[N * d:, :d] = np.eye(d)
    return M


def build_monodromy(system: DdeSystem, N: int) -> MonodromyMatrix:
    """Assemble ``U_N``; raises :class:`~floqcert.errors.SingularSystem` if needed."""
    op = CollocationOperator(system.A, N, system.d)
    U = op.solve(build_hatM_B(system, N))
    return MonodromyMatrix(system, int(N), U, op)


def spectral_radius(M: MonodromyMatrix) -> float:
    """Largest eigenvalue modulus of ``U_N``."""
    return float(np.abs(M.eigenvalues[0]))


def step_history(M: MonodromyMatrix, f: ChebPoly, k: int) -> list[ChebPoly]:
    """Apply ``U_N`` ``k`` times to the history ``f``, returning every step."""
    if f.N != M.N:
        f = ChebPoly.interpolate(lambda t: f(t).reshape(len(t), -1), M.N)
    out = []
    cur = f
    for _ in range(k):
        cur = M.apply(cur)
        out.append(cur)
    return out


def uhat_norm_bound(system: DdeSystem, C_A: float) -> float:
    """A priori bound on the H1 operator norm of the exact monodromy operator.

    ``d == 1`` uses ``c0 + c1 C + c2 C^2``; systems use
    ``sqrt(2 pi d) (c a C + |B| (c^2 + pi a^2 C^2 / 2)^(1/2))`` with
    ``a^2 = 1 + |A|^2`` and ``c = 0.9062``.
    """
    A_sup = matrix_sup_bound(system.A, system.d)
    B_sup = matrix_sup_bound(system.B, system.d)
    if system.d == 1:
        c0 = B_sup
        c1 = 2.3 * (1.0 + A_sup) + math.pi * B_sup
        c2 = math.pi * math.sqrt(2.0) * A_sup * B_sup
        return c0 + c1 * C_A + c2 * C_A**2
    a = math.sqrt(1.0 + A_sup**2)
    c = POINTWISE_CONSTANT
    return math.sqrt(2 * math.pi * system.d) * (
        c * a * C_A + B_sup * math.sqrt(c**2 + math.pi * a**2 * C_A**2 / 2)
    )
