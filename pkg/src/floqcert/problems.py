"""Named problems for the command line tools.

Periodic problems are written in physical time ``t`` on ``[-T/2, T/2]``,
where ``T`` is the period (and the delay).  They are mapped to the standard
interval by ``t = (T/2) tau``, which multiplies every coefficient by
``T/2``.  With the default ``T = 2`` the map is the identity.

Each DDE entry also carries closed-form bounds for the regularity-ellipse
constants, so that certification does not depend on sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .certify import EllipseData, RegularityEllipse
from .ivp import LinearIVP
from .monodromy import DdeSystem


def _const(value):
    def f(t):
        return np.full(np.shape(t), value)
    return f


def _mat2(a11, a12, a21, a22):
    """Assemble a 2x2 matrix-valued callable from four scalar callables."""

    def f(t):
        t = np.asarray(t)
        rows = [np.stack([np.broadcast_to(a11(t), t.shape), np.broadcast_to(a12(t), t.shape)], -1),
                np.stack([np.broadcast_to(a21(t), t.shape), np.broadcast_to(a22(t), t.shape)], -1)]
        return np.stack(rows, -2)

    return f


@dataclass(frozen=True)
class Rescaled:
    """``tau -> (T/2) f((T/2) tau)``; the identity map when ``T == 2``."""

    f: Callable
    period: float = 2.0

    def __call__(self, tau):
        h = self.period / 2.0
        return h * np.asarray(self.f(h * np.asarray(tau)))


@dataclass(frozen=True)
class DdeProblem:
    """A periodic DDE on the standard interval with its ellipse constants."""

    name: str
    system: DdeSystem
    params: dict
    period: float
    ellipse_bounds: Callable = field(repr=False)
    scalar_a: Callable | None = field(default=None, repr=False)

    def ellipse_data(self, ellipse: RegularityEllipse, delta: float) -> EllipseData:
        return self.ellipse_bounds(ellipse, delta)


@dataclass(frozen=True)
class IvpProblem:
    """A linear initial value problem with an optional exact solution."""

    name: str
    ivp: LinearIVP
    params: dict
    exact: Callable | None = field(default=None, repr=False)
    constant_a: complex | None = None


def _period_factor(period: float) -> float:
    if not period > 0:
        raise ValueError(f"period must be positive, got {period!r}")
    return period / 2.0


def _intro_dde(p, T):
    a, b = p["a"], p["b"]
    h = _period_factor(T)
    A = Rescaled(_const(a), T)
    B = Rescaled(lambda t: b + np.sin(3 * np.pi * (t / h)), T)

    def bounds(ell, delta):
        # |sin(x + iy)| <= cosh(y) and |Im z| <= s on the ellipse
        A_E = h * abs(a) * (1 + ell.S)
        B_E = h * (abs(b) * (1 + ell.S) + (math.cosh(3 * math.pi * ell.s) + 1) / (3 * math.pi))
        return EllipseData.scalar(A_E, B_E)

    return DdeProblem("intro_dde", DdeSystem(A, B, 1), p, T, bounds, A)


def _scalar_constant(p, T):
    a0, b0 = p["a0"], p["b0"]
    h = _period_factor(T)

    def bounds(ell, delta):
        return EllipseData.scalar(h * abs(a0) * (1 + ell.S), h * abs(b0) * (1 + ell.S))

    A = Rescaled(_const(a0), T)
    return DdeProblem("scalar_constant", DdeSystem(A, Rescaled(_const(b0), T), 1), p, T,
                      bounds, A)


def _trig_dde(p, T):
    a0, a1, a2 = p["a0"], p["a1"], p["a2"]
    b0, b1, b2 = p["b0"], p["b1"], p["b2"]
    h = _period_factor(T)

    def harmonic(c0, c1, c2):
        return lambda t: c0 + c1 * np.cos(np.pi * t / h) + c2 * np.sin(np.pi * t / h)

    def integral_bound(c0, c1, c2, ell):
        ch = math.cosh(math.pi * ell.s)
        return h * (abs(c0) * (1 + ell.S) + (abs(c1) * ch + abs(c2) * (ch + 1)) / math.pi)

    def bounds(ell, delta):
        return EllipseData.scalar(integral_bound(a0, a1, a2, ell), integral_bound(b0, b1, b2, ell))

    A = Rescaled(harmonic(a0, a1, a2), T)
    B = Rescaled(harmonic(b0, b1, b2), T)
    return DdeProblem("trig_dde", DdeSystem(A, B, 1), p, T, bounds, A)


def _delayed_mathieu(p, T):
    b, c = p["b"], p["c"]
    h = _period_factor(T)
    zero, one = _const(0.0), _const(1.0)
    A = Rescaled(_mat2(zero, one, lambda t: -1 - np.cos(np.pi * t / h), _const(-c)), T)
    B = Rescaled(_mat2(zero, zero, _const(b), zero), T)

    def bounds(ell, delta):
        # Frobenius bound on A + B / lambda over the period, |lambda| >= delta
        norm = math.sqrt(1 + c * c + (2 + abs(b) / delta) ** 2)
        return EllipseData.system(math.exp((1 + ell.S) * h * norm))

    return DdeProblem("delayed_mathieu", DdeSystem(A, B, 2), p, T, bounds)


_DDE = {
    "intro_dde": (_intro_dde, {"a": -1.1, "b": 1.0}),
    "scalar_constant": (_scalar_constant, {"a0": -0.5, "b0": 0.3}),
    "trig_dde": (_trig_dde, {"a0": -1.0, "a1": 0.0, "a2": 0.0, "b0": 0.5, "b1": 0.0, "b2": 0.0}),
    "delayed_mathieu": (_delayed_mathieu, {"b": 0.5, "c": 1.0}),
}


def _example1(p):
    y0 = p["y0"]
    ivp = LinearIVP(3.0, lambda t: np.asarray(t, dtype=float), y0)

    def exact(t):
        t = np.asarray(t, dtype=float)
        return np.exp(3 * (t + 1)) * (y0 - 2 / 9) - (t + 1 / 3) / 3

    return IvpProblem("example1", ivp, p, exact, 3.0)


def _example2(p):
    a, y0 = p["a"], p["y0"]
    return IvpProblem("example2", LinearIVP(a, None, y0), p,
                      lambda t: y0 * np.exp(a * (np.asarray(t, dtype=float) + 1)), a)


def _example3(p):
    a0 = complex(p["a0_re"], p["a0_im"])
    y0, w = p["y0"], p["omega"]
    D = a0 * a0 + w * w

    def exact(t):
        t = np.asarray(t, dtype=float)
        part = (-a0 * np.sin(w * t) - w * np.cos(w * t)) / D
        start = (a0 * np.sin(w) - w * np.cos(w)) / D
        return np.exp(a0 * (t + 1)) * (y0 - start) + part

    ivp = LinearIVP(a0, lambda t: np.sin(w * np.asarray(t, dtype=float)), y0)
    return IvpProblem("example3", ivp, p, exact, a0)


def _example4(p):
    y0 = p["y0"]

    def G(s):
        z = s * s
        return -math.e / 20 * np.exp(-z) * (np.sin(3 * z) + 3 * np.cos(3 * z))

    def exact(t):
        t = np.asarray(t, dtype=float)
        return np.exp(t * t - 1) * (y0 + G(t) - G(-1.0))

    ivp = LinearIVP(lambda t: 2 * np.asarray(t, dtype=float),
                    lambda t: np.asarray(t) * np.sin(3 * np.asarray(t) ** 2), y0)
    return IvpProblem("example4", ivp, p, exact)


def _rotation(p):
    w = p["omega"]
    A = np.array([[0.0, w], [-w, 0.0]])

    def exact(t):
        s = w * (np.asarray(t, dtype=float) + 1)
        return np.stack([np.cos(s), -np.sin(s)], -1)

    return IvpProblem("rotation", LinearIVP(A, None, np.array([1.0, 0.0]), d=2), p, exact)


def _zero(p):
    d = int(p["d"])
    return IvpProblem("zero", LinearIVP(np.zeros((d, d)), None, np.zeros(d), d=d), p,
                      lambda t: np.zeros(np.shape(t) + ((d,) if d > 1 else ())))


def _stiff_mathieu(p):
    k0, k1, c = p["k0"], p["k1"], p["c"]
    A = _mat2(_const(0.0), _const(1.0), lambda t: -k0 - k1 * np.cos(np.pi * t), _const(-c))
    return IvpProblem("stiff_mathieu", LinearIVP(A, None, np.array([1.0, 0.0]), d=2), p)


_IVP = {
    "example1": (_example1, {"y0": 0.2}),
    "example2": (_example2, {"a": 10.0, "y0": 1.0}),
    "example3": (_example3, {"a0_re": 3.0, "a0_im": 37.0, "y0": 0.2, "omega": 20.0}),
    "example4": (_example4, {"y0": 1.0}),
    "rotation": (_rotation, {"omega": 1.0}),
    "zero": (_zero, {"d": 1}),
    "stiff_mathieu": (_stiff_mathieu, {"k0": 10.0, "k1": 9.0, "c": 1.0}),
}


def dde_names() -> list[str]:
    return sorted(_DDE)


def ivp_names() -> list[str]:
    return sorted(_IVP)


def problem_kind(name: str) -> str:
    if name in _DDE:
        return "dde"
    if name in _IVP:
        return "ivp"
    raise KeyError(f"unknown problem {name!r}; known: {', '.join(dde_names() + ivp_names())}")


def _merge(name: str, defaults: dict, params: dict | None) -> dict:
    params = dict(params or {})
    unknown = set(params) - set(defaults)
    if unknown:
        raise KeyError(f"unknown parameter(s) for {name}: {', '.join(sorted(unknown))}")
    merged = dict(defaults)
    merged.update({k: float(v) for k, v in params.items()})
    return merged


def default_params(name: str) -> dict:
    table = _DDE if problem_kind(name) == "dde" else _IVP
    return dict(table[name][1])


def make_dde(name: str, params: dict | None = None, period: float = 2.0) -> DdeProblem:
    """Build the registered DDE ``name`` with ``params`` overriding its defaults."""
    if problem_kind(name) != "dde":
        raise KeyError(f"{name!r} is not a DDE problem")
    builder, defaults = _DDE[name]
    return builder(_merge(name, defaults, params), float(period))


def make_ivp(name: str, params: dict | None = None) -> IvpProblem:
    """Build the registered initial value problem ``name``."""
    if problem_kind(name) != "ivp":
        raise KeyError(f"{name!r} is not an initial value problem")
    builder, defaults = _IVP[name]
    return builder(_merge(name, defaults, params))


def homogeneous_part(name: str, params: dict | None = None, period: float = 2.0):
    """Coefficient ``A`` and its size for any registered problem (DDE or IVP)."""
    if problem_kind(name) == "dde":
        prob = make_dde(name, params, period)
        return prob.system.A, prob.system.d
    prob = make_ivp(name, params)
    return prob.ivp.A, prob.ivp.d
