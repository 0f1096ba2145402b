"""Shared fixtures for the expensive pipelines reused across test modules."""

import numpy as np
import pytest

from floqcert.certify import RegularityEllipse, certify
from floqcert.errors import Unverifiable
from floqcert.fundamental import bootstrap_bound
from floqcert.ivp import scalar_growth_constant
from floqcert.monodromy import build_monodromy
from floqcert.problems import make_dde, make_ivp


def _certify_intro(N):
    prob = make_dde("intro_dde")
    ell = RegularityEllipse(0.5)
    C_a = scalar_growth_constant(prob.system.A)
    M = build_monodromy(prob.system, N)
    return certify(prob.system, M, C_a, ell, prob.ellipse_data(ell, 0.2), 0.2, strict=False)


@pytest.fixture(scope="session")
def intro_cert_184():
    return _certify_intro(184)


@pytest.fixture(scope="session")
def intro_cert_220():
    return _certify_intro(220)


@pytest.fixture(scope="session")
def stiff_mathieu_bootstrap():
    A = make_ivp("stiff_mathieu").ivp.A
    return bootstrap_bound(A, 50)


@pytest.fixture(scope="session")
def delayed_mathieu_bootstrap():
    prob = make_dde("delayed_mathieu")
    return bootstrap_bound(prob.system.A, 73, d=2)


@pytest.fixture(scope="session")
def delayed_mathieu_cert(delayed_mathieu_bootstrap):
    """Certification at N=73, delta=0.3; returned even when the radius is not below 1."""
    prob = make_dde("delayed_mathieu")
    ell = RegularityEllipse(0.5)
    M = build_monodromy(prob.system, 73)
    try:
        return certify(prob.system, M, delayed_mathieu_bootstrap.value, ell,
                       prob.ellipse_data(ell, 0.3), 0.3, strict=True)
    except Unverifiable as exc:
        return exc.certification


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per acceptance criterion; printed in the terminal summary."""
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, [])

    def record(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} | {detail}"
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
