"""Tests for the weighted L2/H1 norms and the bounds derived from them."""

import math

import numpy as np
import pytest

from floqcert.cheb import ChebCoeffs, coeffs_from_values, collocation_points
from floqcert.h1 import (
    POINTWISE_CONSTANT,
    h1_bound_from_sup,
    h1_norm,
    normalized_cheb,
    pointwise_bound,
    tilde_scale,
)

cheb = np.polynomial.chebyshev


class TestNormalizedCheb:
    def test_hat_zero(self):
        assert normalized_cheb(0, 0.3) == pytest.approx(0.5641895835, abs=1e-10)

    def test_tilde_one(self):
        assert normalized_cheb(1, 1.0, kind="tilde") == pytest.approx(0.3989422804, abs=1e-10)

    def test_bad_kind(self):
        with pytest.raises(ValueError):
            normalized_cheb(2, 0.0, kind="plain")

    @pytest.mark.parametrize("k", range(11))
    def test_tilde_unit_h1(self, k):
        a = np.zeros(k + 1)
        a[k] = 1.0 / tilde_scale(k)[k]
        assert h1_norm(a).h1 == pytest.approx(1.0, rel=1e-14)


class TestH1Norm:
    def test_constant(self):
        n = h1_norm(ChebCoeffs(np.array([1.0])))
        assert n.l2 == pytest.approx(math.sqrt(math.pi))
        assert n.h1 == pytest.approx(math.sqrt(math.pi))

    def test_t1(self):
        assert h1_norm(np.array([0.0, 1.0])).h1 == pytest.approx(2 * math.sqrt(math.pi / 2))

    def test_l2_matches_weighted_integral(self):
        # int T_k^2 / sqrt(1 - t^2) = pi/2 for k >= 1 and pi for k = 0
        a = np.array([0.5, -1.0, 2.0])
        expected = math.sqrt(math.pi * 0.25 + math.pi / 2 * (1 + 4))
        assert h1_norm(a).l2 == pytest.approx(expected)

    def test_h1_dominates_l2(self, rng):
        n = h1_norm(rng.standard_normal(20))
        assert n.h1 >= n.l2

    def test_homogeneous(self, rng):
        a = rng.standard_normal(15) + 1j * rng.standard_normal(15)
        alpha = -2.5 + 1.5j
        assert h1_norm(alpha * a).h1 == pytest.approx(abs(alpha) * h1_norm(a).h1, rel=1e-13)

    def test_vector_series(self, rng):
        a = rng.standard_normal((8, 2))
        expected = math.hypot(h1_norm(a[:, 0]).h1, h1_norm(a[:, 1]).h1)
        assert h1_norm(a).h1 == pytest.approx(expected, rel=1e-14)


class TestPointwise:
    def test_constant_value(self):
        assert pointwise_bound(1.0) == POINTWISE_CONSTANT == 0.9062
        assert pointwise_bound(0.0) == 0.0

    def test_exceeds_exact_constant(self):
        assert math.sqrt(2 * (math.pi / 3 - 2 / math.pi)) <= POINTWISE_CONSTANT

    def test_tilde_zero(self):
        assert 1 / math.sqrt(math.pi) <= pointwise_bound(1.0)

    def test_random_polynomials(self, rng):
        t = np.linspace(-1, 1, 1000)
        for _ in range(20):
            N = int(rng.integers(0, 33))
            a = rng.standard_normal(N + 1) / (1 + np.arange(N + 1))
            assert pointwise_bound(h1_norm(a).h1) >= np.abs(cheb.chebval(t, a)).max()


class TestH1FromSup:
    def test_values(self):
        assert h1_bound_from_sup(0.0, 0.0) == 0.0
        assert h1_bound_from_sup(1.0, 0.0) == pytest.approx(2.5066, abs=1e-4)

    def test_constant_function(self):
        assert h1_norm(np.array([1.0])).h1 <= h1_bound_from_sup(1.0, 0.0)

    def test_elementwise(self):
        out = h1_bound_from_sup(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
        np.testing.assert_allclose(out, [math.sqrt(2 * math.pi)] * 2)

    def test_dominates_random_polynomials(self, rng):
        t = collocation_points(3000).points
        for _ in range(20):
            N = int(rng.integers(0, 33))
            a = rng.standard_normal(N + 1)
            f_sup = np.abs(cheb.chebval(t, a)).max()
            fd_sup = np.abs(cheb.chebval(t, cheb.chebder(a))).max() if N else 0.0
            assert h1_bound_from_sup(f_sup, fd_sup) >= h1_norm(a).h1

    def test_from_interpolated_values(self):
        x = collocation_points(20).points
        a = coeffs_from_values(np.exp(x))
        t = np.linspace(-1, 1, 1000)
        assert h1_bound_from_sup(np.exp(1), np.exp(1)) >= h1_norm(a).h1
        assert pointwise_bound(h1_norm(a).h1) >= np.exp(t).max()
