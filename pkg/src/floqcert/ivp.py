"""Collocation solver for linear ODE initial value problems on [-1, 1].

Solves ``y' = A(t) y + u(t)``, ``y(-1) = y0`` by requiring the degree-``N``
polynomial ``p`` to satisfy the ODE at ``t_0 .. t_{N-1}`` and the initial
condition at ``t_N = -1``, and attaches a posteriori sup-norm error bounds
for ``y - p`` and ``y' - p'``.

Coefficient callables are evaluated on arrays of times.  A matrix function
may return shape ``(n, d, d)`` for ``n`` times, a single ``(d, d)`` matrix
(treated as constant), or for ``d == 1`` a length-``n`` array.  Plain
numbers and arrays are accepted as constant coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla

from .cheb import (
    EPS,
    ChebPoly,
    adaptive_coeff_sums,
    bary_values,
    coeffs_from_values,
    collocation_points,
    diff_matrix,
)
from .errors import NonConverged, SingularSystem


def _evaluate(f, t, shape):
    t = np.atleast_1d(np.asarray(t, dtype=float))
    n = t.shape[0]
    target = (n,) + shape
    if not callable(f):
        val = np.asarray(f, dtype=complex).reshape(shape)
        return np.broadcast_to(val, target).copy()
    try:
        val = np.asarray(f(t), dtype=complex)
    except (TypeError, ValueError):
        val = None
    if val is not None:
        if val.shape == target:
            return val
        if val.shape == shape or val.size == 1:
            return np.broadcast_to(val.reshape(shape), target).copy()
        if val.size == n * math.prod(shape):
            return val.reshape(target)
    return np.stack([np.asarray(f(float(ti)), dtype=complex).reshape(shape) for ti in t])


def matrix_values(A, t, d: int) -> np.ndarray:
    """Values of a matrix coefficient at times ``t``, shape ``(n, d, d)``."""
    return _evaluate(A, t, (d, d))


def vector_values(u, t, d: int) -> np.ndarray:
    """Values of a vector coefficient at times ``t``, shape ``(n, d)``."""
    if u is None:
        return np.zeros((np.atleast_1d(t).shape[0], d), dtype=complex)
    return _evaluate(u, t, (d,))


def matrix_sup_bound(A, d: int) -> float:
    """Upper bound on ``max_t |A(t)|`` (Euclidean operator norm).

    Each entry's sup is bounded by its adaptive Chebyshev coefficient sum and
    the entries are combined in Frobenius norm.
    """

    def sample(t):
        return matrix_values(A, t, d).reshape(t.shape[0], d * d)

    bounds, _, _ = adaptive_coeff_sums(sample)
    return float(np.sqrt(np.sum(bounds**2)))


@dataclass(frozen=True)
class LinearIVP:
    """``y' = A(t) y + u(t)`` on [-1, 1] with ``y(-1) = y0``."""

    A: object
    u: object = None
    y0: object = 0.0
    d: int = 1

    def A_at(self, t) -> np.ndarray:
        return matrix_values(self.A, t, self.d)

    def u_at(self, t) -> np.ndarray:
        return vector_values(self.u, t, self.d)

    @property
    def y0_vec(self) -> np.ndarray:
        return np.asarray(self.y0, dtype=complex).reshape(self.d)


@dataclass(frozen=True)
class CertifiedSolution:
    """Collocation polynomial with a posteriori error bounds."""

    p: ChebPoly
    residual: np.ndarray
    err_sup: float
    deriv_err_sup: float
    C_A_used: float
    interp_Ap: float = 0.0
    interp_u: float = 0.0
    A_sup: float = 0.0
    resolved: bool = True
    rounding: float = 0.0
    interior_residual: float = 0.0

    @property
    def bracket(self) -> float:
        return self.interp_Ap + self.interp_u + float(np.linalg.norm(self.residual))


def build_system_matrices(ivp: LinearIVP, N: int):
    """Return ``(hatD, hatM_A, hat_u)`` for the collocation system.

    Unknowns are ordered node-major: index ``j * d + s`` holds component ``s``
    at node ``t_j``.
    """
    grid = collocation_points(N)
    d = ivp.d
    Dhat = np.array(diff_matrix(N), dtype=float)
    Dhat[N, :] = 0.0
    Dhat[N, N] = 1.0
    hatD = np.kron(Dhat, np.eye(d))
    Avals = ivp.A_at(grid.points[:N])
    hatM = np.zeros((d * (N + 1), d * (N + 1)), dtype=complex)
    for j in range(N):
        hatM[j * d:(j + 1) * d, j * d:(j + 1) * d] = Avals[j]
    hat_u = np.concatenate([ivp.u_at(grid.points[:N]).reshape(-1), ivp.y0_vec])
    return hatD, hatM, hat_u


class CollocationOperator:
    """LU-factored ``hatD - hatM_A`` for one coefficient ``A`` and degree ``N``.

    Reused for every right-hand side sharing ``A``.
    """

    def __init__(self, A, N: int, d: int = 1):
        self.A = A
        self.N = int(N)
        self.d = d
        hatD, hatM, _ = build_system_matrices(LinearIVP(A, None, np.zeros(d), d), N)
        self.hatD = hatD
        self.hatM = hatM
        self.matrix = hatD - hatM
        self._lu = sla.lu_factor(self.matrix, check_finite=True)
        gecon = sla.get_lapack_funcs("gecon", (self._lu[0],))
        anorm = np.abs(self.matrix).sum(axis=0).max()
        rcond, info = gecon(self._lu[0], anorm, norm="1")
        self.rcond = float(rcond)
        if info != 0 or not np.isfinite(self.rcond) or self.rcond < EPS:
            raise SingularSystem(
                f"collocation matrix is singular to working precision (rcond={self.rcond:.3g}, N={N})"
            )

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve with one step of iterative refinement; ``rhs`` is ``(l,)`` or ``(l, m)``."""
        rhs = np.asarray(rhs, dtype=complex)
        x = sla.lu_solve(self._lu, rhs)
        r = rhs - self.matrix @ x
        return x + sla.lu_solve(self._lu, r)

    def rhs(self, u_nodes: np.ndarray, y0: np.ndarray) -> np.ndarray:
        """Stack forcing at ``t_0..t_{N-1}`` (shape ``(N, d, m)``) and ``y0`` (``(d, m)``)."""
        m = y0.shape[-1]
        return np.concatenate([u_nodes.reshape(self.N * self.d, m), y0.reshape(self.d, m)])

    def node_values(self, x: np.ndarray) -> np.ndarray:
        """Reshape solution vectors ``(l, m)`` to node values ``(N + 1, d, m)``."""
        return x.reshape(self.N + 1, self.d, -1)


def solve_ivp(ivp: LinearIVP, N: int, operator: CollocationOperator | None = None) -> ChebPoly:
    """Collocation polynomial of degree ``N`` approximating the IVP solution."""
    op = operator or CollocationOperator(ivp.A, N, ivp.d)
    grid = collocation_points(N)
    rhs = op.rhs(ivp.u_at(grid.points[:N])[:, :, None], ivp.y0_vec[:, None])
    v = op.solve(rhs)
    return ChebPoly(grid, v.reshape(N + 1, ivp.d))


def _interp_error_sups(sample, N: int, d: int, m: int):
    """Sup bounds of ``f - I_N f`` for ``m`` vector functions, Euclidean over ``d``.

    ``sample(t)`` returns ``(len(t), d, m)``.
    """

    def flat(t):
        return sample(t).reshape(t.shape[0], d * m)

    b, _, ok = adaptive_coeff_sums(flat, subtract_degree=N)
    b = b.reshape(d, m)
    ok = ok.reshape(d, m).all(axis=0)
    return np.sqrt(np.sum(b**2, axis=0)), ok


def lebesgue_bound(N: int) -> float:
    """Upper bound ``2/pi log(N + 1) + 1`` on the Lebesgue constant of the extreme points."""
    return 2.0 / math.pi * math.log(N + 1) + 1.0


def evaluation_rounding_bound(p: ChebPoly) -> float:
    """First-order bound on the rounding error of evaluating ``p`` barycentrically.

    ``(3N + 4) u Lambda_N max_j |p(t_j)|`` with unit roundoff ``u = eps / 2``.
    Sampled errors ``|fl(p(t)) - y(t)|`` can exceed ``|p(t) - y(t)|`` by this
    much, so it is added to the reported IVP certificates.
    """
    N = p.N
    return float((3 * N + 4) * (EPS / 2) * lebesgue_bound(N)
                 * np.max(np.linalg.norm(p.values, axis=1)))


def interior_residual_bound(A, N: int, d: int, P: np.ndarray,
                            u_sample: Callable | None = None) -> np.ndarray:
    """Size of the collocation residuals left by rounding (a diagnostic).

    In exact arithmetic ``p' = A p + u`` holds at ``t_0 .. t_{N-1}``.  This
    returns the coefficient sum of the interpolant of the computed residuals
    there (with ``r_N = 0``), one value per column of ``P``.  The residuals
    are themselves computed in floating point, so the number indicates the
    rounding level and is not added to the certificates.
    """
    grid = collocation_points(N)
    pdot = np.tensordot(diff_matrix(N), P, axes=(1, 0))
    r = pdot - np.einsum("nij,njm->nim", matrix_values(A, grid.points, d), P)
    if u_sample is not None:
        r = r - u_sample(grid.points)
    r[N] = 0.0
    m = P.shape[2]
    sums = np.abs(coeffs_from_values(r.reshape(N + 1, d * m))).sum(axis=0)
    return np.sqrt(np.sum(sums.reshape(d, m) ** 2, axis=0))


def certify_batch(A, N: int, d: int, P: np.ndarray, y0: np.ndarray, C_A: float,
                  u_sample: Callable | None = None, A_sup: float | None = None):
    """A posteriori bounds for ``m`` collocation solutions sharing ``A``.

    ``P`` holds node values ``(N + 1, d, m)``, ``y0`` initial values ``(d, m)``
    and ``u_sample(t)`` the forcings ``(len(t), d, m)`` (``None`` for zero).

    Returns a dict of arrays over the ``m`` columns: ``residual`` (``(d, m)``),
    ``interp_Ap``, ``interp_u``, ``bracket``, ``err_sup``, ``deriv_err_sup``,
    ``resolved``, plus the scalar ``A_sup``.
    """
    m = P.shape[2]
    D = diff_matrix(N)
    pdot_end = np.tensordot(D[N], P, axes=(0, 0))
    A_end = matrix_values(A, [-1.0], d)[0]
    u_end = u_sample(np.array([-1.0]))[0] if u_sample is not None else 0.0
    residual = pdot_end - A_end @ y0 - u_end
    res_norm = np.linalg.norm(residual, axis=0)
    interior = interior_residual_bound(A, N, d, P, u_sample)

    def ap_sample(t):
        return np.einsum("nij,njm->nim", matrix_values(A, t, d), bary_values(P, t))

    interp_Ap, ok_ap = _interp_error_sups(ap_sample, N, d, m)
    if u_sample is not None:
        interp_u, ok_u = _interp_error_sups(u_sample, N, d, m)
    else:
        interp_u, ok_u = np.zeros(m), np.ones(m, dtype=bool)
    if A_sup is None:
        A_sup = matrix_sup_bound(A, d)
    bracket = interp_Ap + interp_u + res_norm
    return {
        "residual": residual,
        "interp_Ap": interp_Ap,
        "interp_u": interp_u,
        "interior": interior,
        "bracket": bracket,
        "err_sup": 2.0 * C_A * bracket,
        "deriv_err_sup": (2.0 * A_sup * C_A + 1.0) * bracket,
        "resolved": ok_ap & ok_u,
        "A_sup": A_sup,
    }


def apost_certificate(ivp: LinearIVP, p: ChebPoly, C_A: float,
                      A_sup: float | None = None,
                      include_rounding: bool = True) -> CertifiedSolution:
    """Error bounds for a collocation solution ``p`` of ``ivp``.

    ``C_A`` must bound ``|Phi_A(t) Phi_A(s)^{-1}|`` for ``-1 <= s <= t <= 1``.
    The sup norms of ``A p - I_N(A p)`` and ``u - I_N u`` are estimated per
    component by :func:`~floqcert.cheb.adaptive_sup_norm` machinery and
    combined in Euclidean norm.  ``err_sup`` is ``2 C_A`` times their sum
    with ``|R_p|``, plus :func:`evaluation_rounding_bound` when
    ``include_rounding`` is set.
    """
    d = ivp.d
    u_sample = None
    if ivp.u is not None:
        def u_sample(t):
            return ivp.u_at(t)[:, :, None]
    out = certify_batch(ivp.A, p.N, d, p.values[:, :, None], ivp.y0_vec[:, None], C_A,
                        u_sample=u_sample, A_sup=A_sup)
    rounding = evaluation_rounding_bound(p) if include_rounding else 0.0
    return CertifiedSolution(
        p=p,
        residual=out["residual"][:, 0],
        err_sup=float(out["err_sup"][0]) + rounding,
        deriv_err_sup=float(out["deriv_err_sup"][0]),
        C_A_used=float(C_A),
        interp_Ap=float(out["interp_Ap"][0]),
        interp_u=float(out["interp_u"][0]),
        A_sup=float(out["A_sup"]),
        resolved=bool(out["resolved"][0]),
        rounding=rounding,
        interior_residual=float(out["interior"][0]),
    )


#: ``max_theta sin(theta) (1 - cos(theta))``, enters the derivative bound of the
#: cancellation integrand in :func:`constant_coeff_multiplier`.
SIN_ONE_MINUS_COS_MAX = 3.0 * math.sqrt(3.0) / 4.0


def constant_coeff_multiplier(a0: complex, N: int,
                              fprime_factor: float = SIN_ONE_MINUS_COS_MAX) -> float:
    """Factor multiplying ``|R_p|`` in the constant-coefficient bound.

    The integrand ``e^{-a0 cos(theta)} (1 - cos(theta))`` has derivative at
    most ``(fprime_factor |a0| + 1) e^{|Re a0|}``; the default factor is the
    exact maximum of ``sin(theta) (1 - cos(theta))``.
    """
    a0 = complex(a0)
    re = a0.real
    c = (math.pi * (fprime_factor * abs(a0) + 1.0) + 4.0) * math.exp(2 * abs(re)) / (2.0 * N**2)
    if re > 0:
        return c
    return min(c, math.pi / (2.0 * N))


def constant_coeff_certificate(a0: complex, u, y0: complex, p: ChebPoly,
                               fprime_factor: float = SIN_ONE_MINUS_COS_MAX,
                               include_rounding: bool = True) -> float:
    """Sup-norm error bound for a scalar problem with constant coefficient ``a0``.

    Returns ``2 max(e^{2 Re a0}, 1) ||u - I_N u|| + c |R_p|`` with ``c`` from
    :func:`constant_coeff_multiplier`, plus :func:`evaluation_rounding_bound`
    when ``include_rounding`` is set.
    """
    a0 = complex(a0)
    N = p.N
    pdot_end = (diff_matrix(N)[N] @ p.values[:, 0])
    u_end = vector_values(u, [-1.0], 1)[0, 0]
    R = pdot_end - a0 * complex(y0) - u_end
    if u is None:
        u_err = 0.0
    else:
        u_err, _ = _interp_error_sups(lambda t: vector_values(u, t, 1)[:, :, None], N, 1, 1)
        u_err = float(u_err[0])
    growth = max(math.exp(2 * a0.real), 1.0)
    bound = 2.0 * growth * u_err + constant_coeff_multiplier(a0, N, fprime_factor) * abs(R)
    if include_rounding:
        bound += evaluation_rounding_bound(p)
    return bound


def _cc_rule(n: int):
    """Clenshaw-Curtis nodes and weights on [-1, 1] with ``n + 1`` points (``n`` even)."""
    theta = np.pi * np.arange(n + 1) / n
    x = np.cos(theta)
    w = np.zeros(n + 1)
    v = np.ones(n - 1)
    for k in range(1, n // 2):
        v -= 2 * np.cos(2 * k * theta[1:-1]) / (4 * k * k - 1)
    v -= np.cos(n * theta[1:-1]) / (n * n - 1)
    w[1:-1] = 2 * v / n
    w[0] = w[n] = 1.0 / (n * n - 1)
    return x, w


_CC_X, _CC_W = _cc_rule(8)


def _composite_cc(f, panels: int) -> float:
    edges = np.linspace(-1.0, 1.0, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    t = (mid[:, None] + half[:, None] * _CC_X[None, :]).reshape(-1)
    vals = np.asarray(f(t), dtype=float).reshape(panels, -1)
    return float(np.sum(half * (vals @ _CC_W)))


def scalar_growth_constant(a, rtol: float = 1e-10, max_points: int = 2**15) -> float:
    """Estimate ``C_a = exp(int_{-1}^{1} max(Re a, 0) ds)``.

    Composite 9-point Clenshaw-Curtis with panel doubling until successive
    levels agree to ``rtol``; the last difference is added to the integral as
    a safety margin.  The result is a numerical estimate, not a rigorous bound.
    """

    def f(t):
        return np.maximum(vector_values(a, t, 1)[:, 0].real, 0.0)

    panels = 1
    prev = _composite_cc(f, panels)
    while True:
        panels *= 2
        cur = _composite_cc(f, panels)
        diff = abs(cur - prev)
        if diff <= rtol * max(abs(cur), 1e-300) or diff == 0.0:
            return math.exp(cur + diff)
        if panels * (len(_CC_X) - 1) >= max_points:
            raise NonConverged(f"growth-constant quadrature did not converge (last change {diff:.3g})")
        prev = cur
