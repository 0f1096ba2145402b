"""Chebyshev-weighted L2 and H1 norms of polynomials.

``f_hat_k`` denotes the coefficient of ``f`` against the orthonormal family
``T_hat_0 = 1/sqrt(pi)``, ``T_hat_k = sqrt(2/pi) T_k``.  The H1 norm weights
``|f_hat_k|^2`` by ``(1 + k)^2``.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .cheb import ChebCoeffs

#: Rigorous constant for ``|f(t)| <= POINTWISE_CONSTANT * ||f||_H1``.
POINTWISE_CONSTANT = 0.9062


class H1Norm(NamedTuple):
    l2: float
    h1: float


def normalized_cheb(k: int, t, kind: str = "hat"):
    """Evaluate ``T_hat_k`` (``kind="hat"``) or ``T_tilde_k = T_hat_k / (1 + k)``."""
    t = np.asarray(t, dtype=float)
    if k == 0:
        val = np.full_like(t, 1.0 / np.sqrt(np.pi))
    else:
        val = np.sqrt(2.0 / np.pi) * np.cos(k * np.arccos(np.clip(t, -1.0, 1.0)))
    if kind == "tilde":
        val = val / (1.0 + k)
    elif kind != "hat":
        raise ValueError(f"kind must be 'hat' or 'tilde', got {kind!r}")
    return val[()] if val.ndim == 0 else val


def coeff_scale(N: int) -> np.ndarray:
    """Factors mapping plain ``T_k`` coefficients to ``T_hat_k`` coefficients."""
    s = np.full(N + 1, np.sqrt(np.pi / 2))
    s[0] = np.sqrt(np.pi)
    return s


def tilde_scale(N: int) -> np.ndarray:
    """Factors mapping plain ``T_k`` coefficients to ``T_tilde_k`` coefficients."""
    return coeff_scale(N) * (1.0 + np.arange(N + 1))


def h1_norm(c) -> H1Norm:
    """L2 and H1 norms of a Chebyshev series (vector series: summed over components)."""
    a = c.coeffs if isinstance(c, ChebCoeffs) else np.asarray(c)
    N = a.shape[0] - 1
    fhat = np.abs(a) * (coeff_scale(N) if a.ndim == 1 else coeff_scale(N)[:, None])
    w = 1.0 + np.arange(N + 1)
    if a.ndim > 1:
        w = w[:, None]
    return H1Norm(float(np.sqrt(np.sum(fhat**2))), float(np.sqrt(np.sum((w * fhat) ** 2))))


def pointwise_bound(h1: float) -> float:
    """Uniform bound on ``|f(t)|`` from ``||f||_H1``."""
    return POINTWISE_CONSTANT * h1


def h1_bound_from_sup(f_sup, fdot_sup):
    """Bound ``||f||_H1`` by ``sqrt(2 pi (||f||_inf^2 + ||f'||_inf^2))``.

    For vector functions pass the sup of the Euclidean norms.  Works
    elementwise on arrays.
    """
    out = np.sqrt(2 * np.pi * (np.square(f_sup) + np.square(fdot_sup)))
    return float(out) if np.ndim(out) == 0 else out
