"""Chebyshev extreme-point grids, spectral differentiation and interpolation.

Polynomials are stored by their values at the nodes ``t_j = cos(pi j / N)``,
ordered from ``t_0 = 1`` down to ``t_N = -1``.  Vector-valued polynomials
keep one column per component.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np

from .errors import NonResolvedWarning

EPS = np.finfo(float).eps

#: Starting and final degree of the adaptive sup-norm estimator.
ADAPTIVE_START = 15
ADAPTIVE_MAX = 4095


@dataclass(frozen=True)
class ChebGrid:
    """Chebyshev extreme points of degree ``N``."""

    N: int
    points: np.ndarray

    @property
    def size(self) -> int:
        return self.N + 1


@dataclass(frozen=True)
class ChebPoly:
    """A polynomial of degree at most ``grid.N`` given by its node values.

    ``values`` has shape ``(N + 1, d)``.
    """

    grid: ChebGrid
    values: np.ndarray

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.shape[0] != self.grid.size:
            raise ValueError(
                f"values must have shape ({self.grid.size}, d), got {self.values.shape}"
            )

    @property
    def N(self) -> int:
        return self.grid.N

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def __call__(self, t):
        return bary_eval(self, t)

    @classmethod
    def from_values(cls, values) -> "ChebPoly":
        v = np.asarray(values, dtype=complex)
        if v.ndim == 1:
            v = v[:, None]
        return cls(collocation_points(v.shape[0] - 1), v)

    @classmethod
    def interpolate(cls, f: Callable, N: int) -> "ChebPoly":
        """Interpolate the vectorized callable ``f`` at the degree-``N`` nodes."""
        grid = collocation_points(N)
        v = np.asarray(f(grid.points), dtype=complex)
        if v.ndim == 1:
            v = v[:, None]
        return cls(grid, v)


@dataclass(frozen=True)
class ChebCoeffs:
    """Coefficients ``a_k`` in the ``T_k`` basis, shape ``(N + 1,)`` or ``(N + 1, d)``."""

    coeffs: np.ndarray

    @property
    def N(self) -> int:
        return self.coeffs.shape[0] - 1

    def __call__(self, t):
        return np.polynomial.chebyshev.chebval(np.asarray(t), self.coeffs)


@lru_cache(maxsize=64)
def _points(N: int) -> np.ndarray:
    # sin form is symmetric about 0 and exact at the middle node
    j = np.arange(N + 1)
    pts = np.sin(np.pi * (N - 2 * j) / (2 * N))
    pts.setflags(write=False)
    return pts


def collocation_points(N: int) -> ChebGrid:
    """Return the Chebyshev extreme points ``cos(pi j / N)``, ``j = 0..N``."""
    if int(N) != N or N < 1:
        raise ValueError(f"N must be an integer >= 1, got {N!r}")
    N = int(N)
    return ChebGrid(N, _points(N))


@lru_cache(maxsize=64)
def _diff_matrix(N: int) -> np.ndarray:
    x = _points(N)
    c = np.ones(N + 1)
    c[0] = c[N] = 2.0
    c *= (-1.0) ** np.arange(N + 1)
    dx = x[:, None] - x[None, :]
    D = np.outer(c, 1.0 / c) / (dx + np.eye(N + 1))
    D -= np.diag(D.sum(axis=1))
    D.setflags(write=False)
    return D


def diff_matrix(N: int) -> np.ndarray:
    """Chebyshev spectral differentiation matrix ``D_N``.

    The diagonal is the negative row sum of the off-diagonal entries.
    """
    collocation_points(N)
    return _diff_matrix(int(N))


def _as_columns(v):
    v = np.asarray(v)
    return v[:, None] if v.ndim == 1 else v


def coeffs_from_values(v: np.ndarray) -> np.ndarray:
    """Chebyshev coefficients of the interpolant of node values ``v``.

    Works along axis 0; trailing axes are independent columns.
    """
    v = np.asarray(v)
    N = v.shape[0] - 1
    if N == 0:
        return v.astype(complex if np.iscomplexobj(v) else float)
    ext = np.concatenate([v, v[N - 1:0:-1]], axis=0)
    a = np.fft.fft(ext, axis=0)[: N + 1] / N
    a[0] /= 2
    a[N] /= 2
    return a.real if np.isrealobj(v) else a


def values_from_coeffs(a: np.ndarray) -> np.ndarray:
    """Evaluate a Chebyshev series at the extreme points of its own degree."""
    a = np.asarray(a)
    N = a.shape[0] - 1
    if N == 0:
        return a.copy()
    b = a.astype(complex)
    b[0] *= 2
    b[N] *= 2
    ext = np.concatenate([b, b[N - 1:0:-1]], axis=0)
    v = np.fft.ifft(ext, axis=0)[: N + 1] * N
    return v.real if np.isrealobj(a) else v


def cheb_coeffs(p: ChebPoly) -> ChebCoeffs:
    """Chebyshev coefficients of ``p`` (one column per component)."""
    return ChebCoeffs(coeffs_from_values(p.values))


def cheb_values(c: ChebCoeffs) -> ChebPoly:
    """Node values of the Chebyshev series ``c``."""
    v = values_from_coeffs(_as_columns(c.coeffs)).astype(complex)
    return ChebPoly(collocation_points(c.N), v)


@lru_cache(maxsize=64)
def _bary_weights(N: int) -> np.ndarray:
    w = (-1.0) ** np.arange(N + 1)
    w[0] *= 0.5
    w[N] *= 0.5
    w.setflags(write=False)
    return w


def bary_values(values: np.ndarray, t) -> np.ndarray:
    """Barycentric evaluation of node values ``values`` (axis 0) at points ``t``.

    Returns an array of shape ``t.shape + values.shape[1:]``.
    """
    values = np.asarray(values)
    N = values.shape[0] - 1
    tj = _points(N)
    w = _bary_weights(N)
    t = np.asarray(t, dtype=float)
    tt = t.reshape(-1)
    diff = tt[:, None] - tj[None, :]
    hit = np.abs(diff) <= 2 * EPS
    hit_row = hit.any(axis=1)
    diff[hit_row] = 1.0
    z = w / diff
    flat = values.reshape(N + 1, -1)
    denom = z.sum(axis=1)
    denom[hit_row] = 1.0
    out = (z @ flat) / denom[:, None]
    if hit_row.any():
        rows = np.nonzero(hit_row)[0]
        cols = hit[rows].argmax(axis=1)
        out[rows] = flat[cols]
    return out.reshape(t.shape + values.shape[1:])


def bary_eval(p: ChebPoly, t):
    """Evaluate ``p`` at ``t`` with the Chebyshev-point barycentric formula.

    Scalar ``t`` gives a scalar (``d == 1``) or a length-``d`` vector.
    """
    out = bary_values(p.values, t)
    if p.d == 1:
        out = out[..., 0]
    return out


def sup_norm_bound(c) -> float:
    """Upper bound ``sum_k |a_k|`` on the sup norm of a Chebyshev series."""
    a = c.coeffs if isinstance(c, ChebCoeffs) else np.asarray(c)
    return float(np.abs(a).sum())


class SupNorm(NamedTuple):
    """Outcome of an adaptive sup-norm estimate."""

    bound: float
    M: int
    resolved: bool


def next_adaptive_degree(M: int) -> int:
    return 2 * (M + 1) - 1


def starting_degree(min_degree: int = 0) -> int:
    """Smallest degree ``2^k - 1 >= 15`` whose last four coefficients lie above ``min_degree``."""
    M = ADAPTIVE_START
    while M - 3 <= min_degree:
        M = next_adaptive_degree(M)
    return M


def adaptive_coeff_sums(sample: Callable, subtract_degree: int | None = None,
                        M_start: int | None = None, M_max: int = ADAPTIVE_MAX):
    """Adaptive coefficient-sum bounds for many functions at once.

    ``sample(t)`` returns an array of shape ``(len(t), m)``: ``m`` scalar
    functions sampled at ``t``.  If ``subtract_degree`` is an integer ``n``,
    each function has its own degree-``n`` interpolant subtracted, so the
    bound is on ``f - I_n f``.

    Returns ``(bounds, degrees, resolved)`` arrays of length ``m``.
    """
    min_deg = -1 if subtract_degree is None else subtract_degree
    M = starting_degree(min_deg) if M_start is None else M_start
    sub = None
    if subtract_degree is not None:
        sub = coeffs_from_values(_as_columns(sample(_points(subtract_degree))))
    bounds = degrees = resolved = None
    active = None
    while True:
        f = _as_columns(sample(_points(M)))
        a = coeffs_from_values(f)
        if bounds is None:
            m = a.shape[1]
            bounds = np.zeros(m)
            degrees = np.zeros(m, dtype=int)
            resolved = np.zeros(m, dtype=bool)
            active = np.ones(m, dtype=bool)
        scale = np.maximum(1.0, np.abs(a).max(axis=0))
        if sub is not None:
            a = a.copy()
            a[: sub.shape[0]] -= sub
        tail = np.abs(a[-4:]).max(axis=0)
        ok = tail < 10 * EPS * scale
        sums = np.abs(a).sum(axis=0)
        upd = active.copy()
        bounds[upd] = sums[upd]
        degrees[upd] = M
        newly = active & ok
        resolved[newly] = True
        active &= ~ok
        if not active.any() or next_adaptive_degree(M) > M_max:
            break
        M = next_adaptive_degree(M)
    return bounds, degrees, resolved


def adaptive_sup_norm_info(f: Callable, subtract_degree: int | None = None) -> SupNorm:
    """Like :func:`adaptive_sup_norm` but also report the final degree and status."""

    def sample(t):
        return np.broadcast_to(np.asarray(f(t)), t.shape)[:, None]

    b, M, ok = adaptive_coeff_sums(sample, subtract_degree)
    return SupNorm(float(b[0]), int(M[0]), bool(ok[0]))


def adaptive_sup_norm(f: Callable, subtract_degree: int | None = None) -> float:
    """Upper estimate of ``max |f|`` on [-1, 1] for an analytic vectorized ``f``.

    ``f`` is interpolated at degrees ``M = 15, 31, ..., 4095`` until the last
    four Chebyshev coefficients drop below ``10 eps max(1, max_k |a_k|)``;
    the sum of the absolute coefficients is returned.  With
    ``subtract_degree=n`` the estimate is for ``f - I_n f``.

    A :class:`~floqcert.errors.NonResolvedWarning` is issued if degree 4095 is
    reached without coefficient decay; the (possibly loose) bound is still
    returned.
    """
    res = adaptive_sup_norm_info(f, subtract_degree)
    if not res.resolved:
        warnings.warn(f"coefficients not resolved at degree {res.M}", NonResolvedWarning,
                      stacklevel=2)
    return res.bound


def little_l_N(N: int, t):
    """Monic node polynomial ``(t - t_0) ... (t - t_{N-1})`` in closed trigonometric form."""
    t = np.asarray(t, dtype=float)
    theta = np.arccos(np.clip(t, -1.0, 1.0))
    s = np.sin(theta)
    near = np.abs(s) < 1e-8
    safe = np.where(near, 1.0, s)
    val = (np.cos(theta) - 1.0) * np.sin(N * theta) / (2.0 ** (N - 1) * safe)
    # limits at the endpoints: 0 at t = 1, (-1)^N N 2^(2-N) at t = -1
    endpoint = np.where(t > 0, 0.0, (-1.0) ** N * N * 2.0 ** (2 - N))
    out = np.where(near, endpoint, val)
    return out[()] if out.ndim == 0 else out


def little_l_N_norm(N: int) -> float:
    """Sup norm ``N 2^(2-N)`` of the node polynomial on [-1, 1]."""
    return N * 2.0 ** (2 - N)
