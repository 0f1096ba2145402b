"""Certified error discs around computed Floquet multipliers.

Given the collocation monodromy matrix ``U_N = V Lambda V^{-1}``, every
eigenvalue ``mu`` of the exact monodromy operator with ``|mu| >= delta``
satisfies ``min_i |mu - lambda_i| <= cond(V_hat) min_k omega_k`` where

``omega_k = eps_k (|U_hat| + |lambda_1| cond(V_hat)) + (1 + eps_k) xi_k``.

Here ``eps_k`` bounds the degree-``k`` interpolation error of a normalized
eigenfunction (from the regularity ellipse of the coefficients), ``xi_k``
accumulates a posteriori bounds ``nu_j^s`` on ``(U_hat - U_hat_N)(T_tilde_j e_s)``
and ``cond(V_hat)`` comes from the eigenvectors written in the ``T_tilde``
basis.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .cheb import EPS, coeffs_from_values, collocation_points
from .errors import NonResolvedWarning, NotDiagonalizable, SingularGamma, Unverifiable
from .h1 import h1_bound_from_sup, tilde_scale
from .ivp import _cc_rule, certify_batch
from .monodromy import DdeSystem, MonodromyMatrix, uhat_norm_bound

USER_SUPPLIED = "user-supplied"
NUMERIC_ESTIMATE = "numeric-estimate"

#: Boundary samples and safety factor of the numerical ellipse estimates.
ELLIPSE_SAMPLES = 720
ELLIPSE_INFLATION = 1.1


@dataclass(frozen=True)
class RegularityEllipse:
    """Ellipse with foci ``+-1``, semiminor axis ``s`` and semimajor axis ``S = sqrt(1 + s^2)``."""

    s: float

    def __post_init__(self):
        if not (self.s > 0 and math.isfinite(self.s)):
            raise ValueError(f"semiminor axis must be positive, got {self.s!r}")

    @property
    def S(self) -> float:
        return math.sqrt(1.0 + self.s * self.s)

    @property
    def eta(self) -> float:
        """``log(S + s)``, the exponential convergence rate on this ellipse."""
        return math.log(self.S + self.s)

    def boundary(self, n: int = ELLIPSE_SAMPLES) -> np.ndarray:
        theta = 2 * np.pi * np.arange(n) / n
        return self.S * np.cos(theta) + 1j * self.s * np.sin(theta)


@dataclass(frozen=True)
class EllipseData:
    """Growth constants of the coefficients on a regularity ellipse.

    Scalar problems use ``A_E = max_E |int_{-1}^z a|`` and
    ``B_E = max_E |int_{-1}^z b|``; systems use ``C_lambda``, a bound on the
    continued fundamental solution of ``x' = (A + B / lambda) x``.
    """

    A_E: float | None = None
    B_E: float | None = None
    C_lambda: float | None = None
    provenance: str = USER_SUPPLIED

    def __post_init__(self):
        for name in ("A_E", "B_E", "C_lambda"):
            val = getattr(self, name)
            if val is not None and not val >= 0:
                raise ValueError(f"{name} must be non-negative, got {val!r}")

    @classmethod
    def scalar(cls, A_E: float, B_E: float) -> "EllipseData":
        return cls(A_E=float(A_E), B_E=float(B_E))

    @classmethod
    def system(cls, C_lambda: float) -> "EllipseData":
        return cls(C_lambda=float(C_lambda))

    @classmethod
    def estimate_scalar(cls, a, b, ellipse: RegularityEllipse,
                        samples: int = ELLIPSE_SAMPLES) -> "EllipseData":
        """Sample ``|int_{-1}^z a|`` and ``|int_{-1}^z b|`` on the boundary of ``ellipse``.

        ``a`` and ``b`` must accept complex arrays.  Not rigorous.
        """
        z = ellipse.boundary(samples)
        A_E = np.abs(_segment_integrals(a, z)).max()
        B_E = np.abs(_segment_integrals(b, z)).max()
        return cls(A_E=float(ELLIPSE_INFLATION * A_E), B_E=float(ELLIPSE_INFLATION * B_E),
                   provenance=NUMERIC_ESTIMATE)

    @classmethod
    def estimate_system(cls, A, B, ellipse: RegularityEllipse, delta: float, d: int,
                        samples: int = ELLIPSE_SAMPLES) -> "EllipseData":
        """``C_lambda = exp(max_z int_{-1}^z (|A| + |B| / delta) |dzeta|)`` over sampled boundary points.

        Norms are Frobenius.  Not rigorous.
        """
        z = ellipse.boundary(samples)

        def density(zeta):
            nA = np.linalg.norm(_matrix_at(A, zeta, d), axis=(-2, -1))
            nB = np.linalg.norm(_matrix_at(B, zeta, d), axis=(-2, -1))
            return nA + nB / delta

        expo = _segment_integrals(density, z, arc_length=True).real.max()
        return cls(C_lambda=float(math.exp(ELLIPSE_INFLATION * expo)),
                   provenance=NUMERIC_ESTIMATE)

    def to_dict(self) -> dict:
        return {"A_E": self.A_E, "B_E": self.B_E, "C_lambda": self.C_lambda,
                "provenance": self.provenance}


_SEG_X, _SEG_W = _cc_rule(64)


def _matrix_at(A, z, d):
    val = np.asarray(A(z) if callable(A) else A, dtype=complex)
    if d == 1 and val.shape[-2:] != (1, 1):
        val = val[..., None, None]
    return np.broadcast_to(val, z.shape + (d, d))


def _segment_integrals(f, z: np.ndarray, arc_length: bool = False) -> np.ndarray:
    """``int_{-1}^{z} f(zeta) dzeta`` along straight segments, one per endpoint in ``z``.

    With ``arc_length`` the measure is ``|dzeta|`` instead.
    """
    half = (z + 1.0) / 2.0
    zeta = -1.0 + half[:, None] * (_SEG_X[None, :] + 1.0)
    vals = np.asarray(f(zeta.reshape(-1)) if callable(f) else f, dtype=complex)
    vals = np.broadcast_to(vals, (zeta.size,)).reshape(zeta.shape)
    return (np.abs(half) if arc_length else half) * (vals @ _SEG_W)


def gamma_matrix(M: MonodromyMatrix) -> np.ndarray:
    """Coefficients of the eigenvector polynomials in the ``T_tilde_j e_s`` basis.

    Row ``j d + s`` and column ``k`` hold the coefficient of
    ``T_tilde_j e_s`` in the polynomial interpolating eigenvector ``k``.
    Eigenvectors are used as returned by the eigensolver (unit 2-norm node
    values), in descending-modulus order.
    """
    _, V = M.eigen
    N, d = M.N, M.d
    coef = coeffs_from_values(V.reshape(N + 1, d, -1))
    return (coef * tilde_scale(N)[:, None, None]).reshape((N + 1) * d, -1)


def cond_vhat(gamma: np.ndarray) -> float:
    """``sqrt((|Gamma|^2 + 1)(|Gamma^{-1}|^2 + 1))`` in the matrix 2-norm."""
    sv = np.linalg.svd(gamma, compute_uv=False)
    if not np.all(np.isfinite(sv)):
        raise SingularGamma("non-finite singular values")
    if sv[-1] < 1e3 * EPS * sv[0]:
        raise SingularGamma(f"Gamma is numerically singular (sigma ratio {sv[-1] / sv[0]:.3g})")
    return float(math.sqrt((sv[0] ** 2 + 1.0) * (sv[-1] ** -2 + 1.0)))


def _tilde_columns(t: np.ndarray, N: int) -> np.ndarray:
    """``T_tilde_j(t)`` for ``j = 0..N`` as columns."""
    return np.polynomial.chebyshev.chebvander(t, N) / tilde_scale(N)


@dataclass(frozen=True)
class NuTable:
    """Bounds ``nu[j, s]`` together with per-entry resolution flags."""

    nu: np.ndarray
    resolved: np.ndarray


def nu_table_info(system: DdeSystem, M: MonodromyMatrix, C_A: float) -> NuTable:
    """Like :func:`nu_table` but also return which entries had resolved sup-norm estimates."""
    N, d = M.N, system.d
    m = (N + 1) * d
    grid = collocation_points(N)
    hist = _tilde_columns(grid.points, N)
    # column c = j d + s is the history T_tilde_j e_s
    F = np.zeros((N + 1, d, N + 1, d))
    for s in range(d):
        F[:, s, :, s] = hist
    F = F.reshape((N + 1) * d, m)
    P = (M.U @ F).reshape(N + 1, d, m)
    y0 = F.reshape(N + 1, d, m)[0].astype(complex)

    def forcing(t):
        Bt = system.B_at(t)
        T = _tilde_columns(t, N)
        return np.einsum("nrs,nj->nrjs", Bt, T).reshape(len(t), d, m)

    out = certify_batch(system.A, N, d, P, y0, C_A, u_sample=forcing)
    nu = h1_bound_from_sup(out["err_sup"], out["deriv_err_sup"])
    nu = np.asarray(nu, dtype=float).reshape(N + 1, d)
    resolved = np.broadcast_to(np.asarray(out["resolved"]), (m,)).reshape(N + 1, d)
    return NuTable(nu, resolved)


def nu_table(system: DdeSystem, M: MonodromyMatrix, C_A: float) -> np.ndarray:
    """H1 bounds ``nu[j, s] >= |(U_hat - U_hat_N)(T_tilde_j e_s)|``, shape ``(N + 1, d)``.

    ``U_hat_N T_tilde_j e_s`` is the degree-``N`` collocation solution of
    ``y' = A y + B T_tilde_j e_s``, ``y(-1) = T_tilde_j(1) e_s``, so each
    entry is the a posteriori certificate of that initial value problem
    converted to an H1 bound.  All ``(N + 1) d`` problems share one
    factorization and are certified together.
    """
    table = nu_table_info(system, M, C_A)
    if not table.resolved.all():
        warnings.warn(f"{int((~table.resolved).sum())} nu entries rest on unresolved "
                      "sup-norm estimates", NonResolvedWarning, stacklevel=2)
    return table.nu


def eps_sequence(ellipse: RegularityEllipse, data: EllipseData, delta: float, N: int,
                 d: int = 1) -> np.ndarray:
    """Eigenfunction interpolation bounds ``eps_k`` for ``k = 1..N``.

    Scalar: ``8 e^{A_E + B_E / delta} k e^{-k eta} / sinh(eta)``.
    Systems: ``8 sqrt(d) C_lambda k e^{-k eta} / sinh(eta)``.
    """
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta!r}")
    eta = ellipse.eta
    k = np.arange(1, N + 1, dtype=float)
    if d == 1 and data.A_E is not None and data.B_E is not None:
        log_front = math.log(8.0 / math.sinh(eta)) + data.A_E + data.B_E / delta
    elif data.C_lambda is not None:
        log_front = math.log(8.0 * math.sqrt(d) * data.C_lambda / math.sinh(eta))
    else:
        raise ValueError("ellipse data must provide A_E and B_E (scalar) or C_lambda")
    # combine in log form; terms beyond double range become +inf, still a valid bound
    with np.errstate(over="ignore"):
        return np.exp(log_front + np.log(k) - k * eta)


@dataclass(frozen=True)
class Certification:
    """Outcome of certifying the large Floquet multipliers.

    ``radius`` bounds the distance from every exact multiplier ``mu`` with
    ``|mu| >= delta`` to the nearest computed ``lambdas[i]``.
    """

    lambdas: np.ndarray
    condV: float
    uhat_norm: float
    nus: np.ndarray
    xis: np.ndarray
    epss: np.ndarray
    omegas: np.ndarray
    radius: float
    delta: float
    stable: bool
    N: int
    C_A: float
    provenance: dict = field(default_factory=dict)

    @property
    def lambda1(self) -> float:
        return float(abs(self.lambdas[0]))

    @property
    def k_min(self) -> int:
        """Degree ``k`` at which ``omega_k`` is smallest."""
        return int(np.argmin(self.omegas)) + 1

    @property
    def verdict(self) -> str:
        return "stable" if self.stable else "inconclusive"

    def recompute_omegas(self) -> np.ndarray:
        e = self.epss
        return e * (self.uhat_norm + self.lambda1 * self.condV) + (1.0 + e) * self.xis

    def ledger_error(self) -> float:
        """Largest relative mismatch between stored and recomputed ``omega_k``."""
        ref = self.recompute_omegas()
        return float(np.max(np.abs(ref - self.omegas) / np.maximum(np.abs(ref), 1e-300)))

    def large_eigenvalues(self) -> np.ndarray:
        """Computed eigenvalues whose disc can contain a multiplier of modulus ``>= delta``."""
        return self.lambdas[np.abs(self.lambdas) + self.radius >= self.delta]

    def to_dict(self) -> dict:
        big = self.large_eigenvalues()
        return {
            "N": self.N,
            "delta": self.delta,
            "radius": self.radius,
            "verdict": self.verdict,
            "stable": self.stable,
            "lambda1_abs": self.lambda1,
            "n_above_delta": int(np.sum(np.abs(self.lambdas) >= self.delta)),
            "eigenvalues": [{"re": float(z.real), "im": float(z.imag), "abs": float(abs(z)),
                             "radius": self.radius} for z in big],
            "condV": self.condV,
            "uhat_norm": self.uhat_norm,
            "C_A": self.C_A,
            "k_min": self.k_min,
            "nu": self.nus.tolist(),
            "xi": self.xis.tolist(),
            "eps": self.epss.tolist(),
            "omega": self.omegas.tolist(),
            "provenance": dict(self.provenance),
        }


def certify(system: DdeSystem, M: MonodromyMatrix, C_A: float, ellipse: RegularityEllipse,
            data: EllipseData, delta: float, strict: bool = True) -> Certification:
    """Assemble the certified radius for the multipliers of modulus at least ``delta``.

    ``C_A`` bounds the fundamental solution of ``y' = A y``.  With ``strict``
    a radius of 1 or more raises :class:`~floqcert.errors.Unverifiable`
    carrying the full ledger; otherwise the certification is returned with
    verdict ``"inconclusive"``.
    """
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta!r}")
    N, d = M.N, system.d
    lam, _ = M.eigen
    condV = cond_vhat(gamma_matrix(M))
    table = nu_table_info(system, M, C_A)
    xis = np.sqrt(np.cumsum(np.sum(table.nu**2, axis=1)))[1:]
    epss = eps_sequence(ellipse, data, delta, N, d)
    uhat = uhat_norm_bound(system, C_A)
    l1 = float(abs(lam[0]))
    omegas = epss * (uhat + l1 * condV) + (1.0 + epss) * xis
    radius = float(condV * omegas.min())
    provenance = {
        "ellipse": {"s": ellipse.s, "S": ellipse.S, "eta": ellipse.eta},
        "ellipse_data": data.to_dict(),
        "nu_resolved": bool(table.resolved.all()),
    }
    cert = Certification(lam, condV, uhat, table.nu, xis, epss, omegas, radius, float(delta),
                         bool(l1 + radius < 1.0), N, float(C_A), provenance)
    if strict and not radius < 1.0:
        raise Unverifiable(f"certified radius {radius:.4g} is not below 1", cert)
    return cert


def bauer_fike_matrix(A: np.ndarray, B: np.ndarray) -> float:
    """``cond_2(V) |B - A|_2`` for ``A = V Lambda V^{-1}``.

    Every eigenvalue of ``B`` lies within this distance of an eigenvalue of
    ``A``.  Raises :class:`~floqcert.errors.NotDiagonalizable` when ``V`` is
    numerically singular.
    """
    A = np.asarray(A)
    B = np.asarray(B)
    if A.shape != B.shape or A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A and B must be square matrices of the same size")
    _, V = sla.eig(A)
    cond = np.linalg.cond(V)
    if not np.isfinite(cond) or cond > 1.0 / EPS:
        raise NotDiagonalizable(f"eigenvector matrix condition {cond:.3g}")
    return float(cond * np.linalg.norm(B - A, 2))
