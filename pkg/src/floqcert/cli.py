"""Command line front end: ``floqcert {solve,certify,chart,bound}``.

Every run is described by one JSON document (``--config``); command line
flags override its entries.  Results go to ``--out`` as ``report.json`` plus
``solution.csv`` (solve) or ``chart.csv`` and ``chart.pgm`` (chart).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import platform
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .certify import EllipseData, RegularityEllipse, certify
from .errors import FloqcertError, Unverifiable
from .fundamental import apriori_bound, bootstrap_bound
from .ivp import apost_certificate, constant_coeff_certificate, scalar_growth_constant, solve_ivp
from .monodromy import build_monodromy, spectral_radius
from .problems import default_params, homogeneous_part, make_dde, make_ivp, problem_kind

log = logging.getLogger("floqcert")

DEFAULTS = {
    "N": 64,
    "delta": 0.2,
    "ellipse_s": 0.5,
    "period": 2.0,
    "params": {},
    "bounds": {},
    "ellipse_estimate": False,
    "tol": None,
    "N_max": 512,
    "bootstrap": {"N": None, "max_iters": 8, "rel_tol": 1e-3},
}

ERROR_SAMPLES = 1000


class ConfigError(ValueError):
    """The run configuration is invalid."""


class StageError(RuntimeError):
    """A pipeline stage failed; the message names the stage."""


def _parse_param(text: str):
    if "=" not in text:
        raise ConfigError(f"--param expects name=value, got {text!r}")
    name, value = text.split("=", 1)
    try:
        return name.strip(), float(value)
    except ValueError as exc:
        raise ConfigError(f"parameter {name!r} must be a number, got {value!r}") from exc


def load_config(args) -> dict:
    """Merge defaults, the JSON file and command line flags (flags win)."""
    cfg = json.loads(json.dumps(DEFAULTS))
    if args.config:
        with open(args.config) as fh:
            user = json.load(fh)
        if not isinstance(user, dict):
            raise ConfigError("config file must hold a JSON object")
        for key, val in user.items():
            if isinstance(val, dict) and isinstance(cfg.get(key), dict):
                cfg[key].update(val)
            else:
                cfg[key] = val
    if args.problem is not None:
        cfg["problem"] = args.problem
    if args.n is not None:
        cfg["N"] = args.n
    if args.delta is not None:
        cfg["delta"] = args.delta
    if args.ellipse_s is not None:
        cfg["ellipse_s"] = args.ellipse_s
    if args.workers is not None:
        cfg["workers"] = args.workers
    for text in args.param or []:
        name, value = _parse_param(text)
        cfg["params"][name] = value
    validate_config(cfg, args.command)
    return cfg


def validate_config(cfg: dict, command: str) -> None:
    if "problem" not in cfg:
        raise ConfigError("no problem given (config key 'problem' or --problem)")
    try:
        kind = problem_kind(cfg["problem"])
    except KeyError as exc:
        raise ConfigError(exc.args[0]) from exc
    if command in ("certify", "chart") and kind != "dde":
        raise ConfigError(f"{command} needs a DDE problem, {cfg['problem']!r} is an IVP")
    if command == "solve" and kind != "ivp":
        raise ConfigError(f"solve needs an IVP problem, {cfg['problem']!r} is a DDE")
    if int(cfg["N"]) != cfg["N"] or cfg["N"] < 1:
        raise ConfigError(f"N must be an integer >= 1, got {cfg['N']!r}")
    cfg["N"] = int(cfg["N"])
    if not 0 < cfg["delta"] < 1:
        raise ConfigError(f"delta must lie in (0, 1), got {cfg['delta']!r}")
    if not cfg["ellipse_s"] > 0:
        raise ConfigError(f"ellipse_s must be positive, got {cfg['ellipse_s']!r}")
    if not cfg["period"] > 0:
        raise ConfigError(f"period must be positive, got {cfg['period']!r}")
    known = set(default_params(cfg["problem"]))
    if command == "chart":
        chart = cfg.get("chart")
        if not isinstance(chart, dict) or "x" not in chart or "y" not in chart:
            raise ConfigError("chart needs a 'chart' object with 'x' and 'y' axes")
        for axis in ("x", "y"):
            ax = chart[axis]
            if ax.get("name") not in known:
                raise ConfigError(f"chart axis {axis} must name a parameter of "
                                  f"{cfg['problem']}: {sorted(known)}")
            if int(ax.get("n", 0)) < 2:
                raise ConfigError(f"chart axis {axis} needs n >= 2")
            if not ax["max"] > ax["min"]:
                raise ConfigError(f"chart axis {axis} needs max > min")
    unknown = set(cfg["params"]) - known
    if unknown:
        raise ConfigError(f"unknown parameter(s) for {cfg['problem']}: {sorted(unknown)}")


def versions() -> dict:
    return {"floqcert": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def write_report(out: Path, command: str, cfg: dict, result: dict) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    report = {"command": command, "config": cfg, "versions": versions(), **result}
    path = out / "report.json"
    with open(path, "w") as fh:
        json.dump(_jsonable(report), fh, indent=2)
    return path


# ---------------------------------------------------------------------------
# solve


def _certify_ivp(prob, p, cfg):
    """Pick the sharpest available certificate for the collocation solution ``p``."""
    bounds = cfg["bounds"]
    if prob.constant_a is not None and prob.ivp.d == 1 and "C_A" not in bounds:
        err = constant_coeff_certificate(prob.constant_a, prob.ivp.u, prob.ivp.y0, p)
        return {"err_sup": err, "method": "constant-coefficient",
                "C_A": max(math.exp(2 * complex(prob.constant_a).real), 1.0),
                "C_A_provenance": "closed-form"}
    C_A, tag = _ivp_growth_bound(prob, p.N, cfg)
    cert = apost_certificate(prob.ivp, p, C_A)
    return {"err_sup": cert.err_sup, "deriv_err_sup": cert.deriv_err_sup, "method": "general",
            "C_A": C_A, "C_A_provenance": tag, "residual": float(np.linalg.norm(cert.residual)),
            "interp_Ap": cert.interp_Ap, "interp_u": cert.interp_u, "resolved": cert.resolved}


def _ivp_growth_bound(prob, N, cfg):
    if "C_A" in cfg["bounds"]:
        return float(cfg["bounds"]["C_A"]), "user-supplied"
    if prob.ivp.d == 1:
        return scalar_growth_constant(prob.ivp.A), "quadrature"
    boot = cfg["bootstrap"]
    fb = bootstrap_bound(prob.ivp.A, boot.get("N") or N, boot["max_iters"], boot["rel_tol"],
                         d=prob.ivp.d)
    return fb.value, "bootstrap"


def cmd_solve(cfg: dict, out: Path) -> dict:
    prob = make_ivp(cfg["problem"], cfg["params"])
    N = cfg["N"]
    tol = cfg.get("tol")
    while True:
        try:
            p = solve_ivp(prob.ivp, N)
        except FloqcertError as exc:
            raise StageError(f"collocation solve failed at N={N}: {exc}") from exc
        try:
            cert = _certify_ivp(prob, p, cfg)
        except FloqcertError as exc:
            raise StageError(f"certificate failed at N={N}: {exc}") from exc
        if tol is None or cert["err_sup"] < tol or 2 * N > cfg["N_max"]:
            break
        N *= 2
    result = {"N": N, "certificate": cert}
    if tol is not None:
        result["tol_met"] = bool(cert["err_sup"] < tol)
    if prob.exact is not None:
        t = np.linspace(-1.0, 1.0, ERROR_SAMPLES)
        diff = np.asarray(p(t)) - np.asarray(prob.exact(t))
        err = np.abs(diff) if diff.ndim == 1 else np.linalg.norm(diff, axis=-1)
        result["actual_error"] = float(err.max())
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "solution.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        header = ["t"]
        for s in range(p.d):
            header += [f"re_y{s + 1}", f"im_y{s + 1}"]
        w.writerow(header)
        for tj, row in zip(p.grid.points, p.values):
            line = [repr(float(tj))]
            for v in row:
                line += [repr(float(v.real)), repr(float(v.imag))]
            w.writerow(line)
    return result


# ---------------------------------------------------------------------------
# certify


def dde_growth_bound(prob, N: int, cfg: dict):
    """Bound on the fundamental solution of ``y' = A y`` for a DDE problem."""
    if "C_A" in cfg["bounds"]:
        return float(cfg["bounds"]["C_A"]), {"provenance": "user-supplied"}
    if prob.system.d == 1:
        return scalar_growth_constant(prob.system.A), {"provenance": "quadrature"}
    boot = cfg["bootstrap"]
    fb = bootstrap_bound(prob.system.A, boot.get("N") or N, boot["max_iters"], boot["rel_tol"],
                         d=prob.system.d)
    return fb.value, fb.to_dict()


def ellipse_data_for(prob, ellipse: RegularityEllipse, cfg: dict) -> tuple[EllipseData, str]:
    delta = cfg["delta"]
    b = cfg["bounds"]
    if prob.system.d == 1 and "A_E" in b and "B_E" in b:
        return EllipseData.scalar(b["A_E"], b["B_E"]), "config"
    if prob.system.d > 1 and "C_lambda" in b:
        return EllipseData.system(b["C_lambda"]), "config"
    if cfg.get("ellipse_estimate"):
        if prob.system.d == 1:
            return EllipseData.estimate_scalar(prob.system.A, prob.system.B, ellipse), "sampled"
        return (EllipseData.estimate_system(prob.system.A, prob.system.B, ellipse, delta,
                                            prob.system.d), "sampled")
    return prob.ellipse_data(ellipse, delta), "closed-form"


def cmd_certify(cfg: dict, out: Path) -> dict:
    prob = make_dde(cfg["problem"], cfg["params"], cfg["period"])
    N = cfg["N"]
    try:
        C_A, growth = dde_growth_bound(prob, N, cfg)
    except FloqcertError as exc:
        raise StageError(f"fundamental-solution bound failed: {exc}") from exc
    try:
        M = build_monodromy(prob.system, N)
    except FloqcertError as exc:
        raise StageError(f"monodromy matrix failed: {exc}") from exc
    ellipse = RegularityEllipse(cfg["ellipse_s"])
    data, source = ellipse_data_for(prob, ellipse, cfg)
    try:
        cert = certify(prob.system, M, C_A, ellipse, data, cfg["delta"], strict=True)
    except Unverifiable as exc:
        cert = exc.certification
        log.warning("%s", exc)
    except FloqcertError as exc:
        raise StageError(f"certification failed: {exc}") from exc
    body = cert.to_dict()
    body["provenance"]["ellipse_data_source"] = source
    body["provenance"]["C_A"] = growth
    return {"certification": body}


# ---------------------------------------------------------------------------
# chart


def _axis(ax: dict) -> np.ndarray:
    return np.linspace(float(ax["min"]), float(ax["max"]), int(ax["n"]))


def _chart_row(job):
    """Spectral radii along one row of the chart (module level so it pickles)."""
    name, params, period, N, xname, xs, yname, y = job
    row = []
    for x in xs:
        p = dict(params)
        p[xname] = float(x)
        p[yname] = float(y)
        try:
            rho = spectral_radius(build_monodromy(make_dde(name, p, period).system, N))
        except Exception as exc:  # a failed pixel must not abort the sweep
            log.debug("pixel (%s, %s) failed: %s", x, y, exc)
            rho = float("nan")
        row.append(rho)
    return row


def worker_count(cfg: dict) -> int:
    env = os.environ.get("FLOQCERT_WORKERS")
    if cfg.get("workers"):
        return max(1, int(cfg["workers"]))
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def chart_grid(cfg: dict, workers: int = 1) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Spectral radius over the chart grid; ``rho[i, j]`` is at ``(xs[j], ys[i])``."""
    chart = cfg["chart"]
    xs, ys = _axis(chart["x"]), _axis(chart["y"])
    jobs = [(cfg["problem"], cfg["params"], cfg["period"], cfg["N"], chart["x"]["name"], xs,
             chart["y"]["name"], y) for y in ys]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_chart_row, jobs))
    else:
        rows = [_chart_row(job) for job in jobs]
    return xs, ys, np.array(rows, dtype=float)


def gray_levels(rho: np.ndarray, span: float = 1.0) -> np.ndarray:
    """Map spectral radii to 8-bit gray levels.

    Stable pixels (``rho < 1``) use 128..255, brighter when more stable;
    unstable pixels use 0..127, darker when more unstable.  ``log10(rho)``
    is clipped to ``[-span, span]``.  Failed pixels are black.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.clip(np.log10(rho), -span, span) / span
    out = np.zeros(rho.shape, dtype=np.uint8)
    stable = rho < 1
    unstable = rho >= 1
    out[stable] = (128 + np.round(-127 * g[stable])).astype(np.uint8)
    out[unstable] = (127 - np.round(127 * g[unstable])).astype(np.uint8)
    return out


def write_pgm(path: Path, levels: np.ndarray) -> None:
    h, w = levels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(levels, dtype=np.uint8).tobytes())


def cmd_chart(cfg: dict, out: Path) -> dict:
    workers = worker_count(cfg)
    xs, ys, rho = chart_grid(cfg, workers)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "chart.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "rho"])
        for i, y in enumerate(ys):
            for j, x in enumerate(xs):
                w.writerow([repr(float(x)), repr(float(y)), repr(float(rho[i, j]))])
    # image rows run from the largest y at the top
    write_pgm(out / "chart.pgm", gray_levels(rho)[::-1])
    finite = np.isfinite(rho)
    return {"chart": {"x": cfg["chart"]["x"], "y": cfg["chart"]["y"], "workers": workers,
                      "failed_pixels": int((~finite).sum()),
                      "stable_pixels": int((rho[finite] < 1).sum())}}


# ---------------------------------------------------------------------------
# bound


def cmd_bound(cfg: dict, out: Path) -> dict:
    A, d = homogeneous_part(cfg["problem"], cfg["params"], cfg["period"])
    if "C_A" in cfg["bounds"]:
        return {"bound": {"value": float(cfg["bounds"]["C_A"]), "provenance": "user-supplied"}}
    boot = cfg["bootstrap"]
    prior = apriori_bound(A, d)
    try:
        fb = bootstrap_bound(A, boot.get("N") or cfg["N"], boot["max_iters"], boot["rel_tol"], d=d)
    except FloqcertError as exc:
        raise StageError(f"bootstrap failed: {exc}") from exc
    return {"bound": fb.to_dict(), "apriori": prior.value}


COMMANDS = {"solve": cmd_solve, "certify": cmd_certify, "chart": cmd_chart, "bound": cmd_bound}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="floqcert", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"floqcert {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {"solve": "solve and certify a linear initial value problem",
             "certify": "certify the large Floquet multipliers of a periodic DDE",
             "chart": "stability chart over two parameters",
             "bound": "bound the fundamental solution of y' = A(t) y"}
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--out", default=".", help="output directory (default: .)")
        p.add_argument("--problem", help="registered problem name")
        p.add_argument("--n", type=int, help="collocation degree N")
        p.add_argument("--delta", type=float, help="smallest multiplier modulus of interest")
        p.add_argument("--ellipse-s", type=float, help="semiminor axis of the regularity ellipse")
        p.add_argument("--param", action="append", metavar="NAME=VALUE",
                       help="problem parameter (repeatable)")
        p.add_argument("--workers", type=int, help="parallel workers for chart")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        cfg = load_config(args)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"floqcert: configuration error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out)
    try:
        result = COMMANDS[args.command](cfg, out)
    except StageError as exc:
        print(f"floqcert {args.command}: {exc}", file=sys.stderr)
        return 1
    path = write_report(out, args.command, cfg, result)
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
