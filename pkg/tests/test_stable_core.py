"""Stable density kernel: values, derivatives, and information constants."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from stableql.errors import DomainError
from stableql.stable_core import StableKernel, stable_tail_coefficient

# Frozen quadrature-oracle values (independent adaptive cosine-transform
# integration, evaluated once and pinned).
PHI_15_AT_HALF = 0.26229684035409045
G_15_AT_HALF = -0.3606453926565999
DG_15_AT_07 = -0.6390051297229816


def quad_density(beta, y):
    val, _ = quad(
        lambda u: math.exp(-(u**beta)) / math.pi,
        0.0, 60.0, weight="cos", wvar=y, limit=400,
    )
    return val


class TestDensityValues:
    @pytest.mark.parametrize("beta", [1.0, 1.2, 1.5, 1.8])
    def test_value_at_zero(self, beta):
        kernel = StableKernel(beta)
        exact = math.gamma(1.0 + 1.0 / beta) / math.pi
        assert abs(kernel.density(0.0) - exact) < 1e-8

    def test_cauchy_closed_form(self, kernel1):
        y = np.linspace(-20, 20, 401)
        assert np.allclose(kernel1.density(y), 1.0 / (np.pi * (1 + y**2)), atol=1e-14)

    def test_frozen_value(self, kernel15):
        assert abs(kernel15.density(0.5) - PHI_15_AT_HALF) < 1e-10

    @pytest.mark.parametrize("beta", [1.2, 1.5, 1.8])
    def test_against_adaptive_quadrature(self, beta):
        kernel = StableKernel(beta)
        for y in [0.0, 0.3, 1.0, 2.7, 8.0, 14.0, 20.0, 40.0]:
            assert abs(kernel.density(y) - quad_density(beta, y)) < 1e-9

    def test_symmetry(self, kernel15):
        y = np.linspace(0.0, 30.0, 500)
        assert np.allclose(kernel15.density(y), kernel15.density(-y), rtol=0, atol=1e-14)

    @pytest.mark.parametrize("beta", [1.0, 1.2, 1.5, 1.8])
    def test_normalization(self, beta):
        kernel = StableKernel(beta)
        assert abs(kernel.normalization() - 1.0) < 1e-8

    def test_positive_everywhere(self, kernel15):
        y = np.linspace(-100, 100, 2001)
        assert np.all(kernel15.density(y) > 0)

    def test_tail_series_matches_power_law(self, kernel15):
        # leading term c_beta |y|^{-1-beta} dominates far out
        y = 200.0
        lead = stable_tail_coefficient(1.5) * y ** (-2.5)
        assert abs(kernel15.density(y) / lead - 1.0) < 1e-2

    def test_non_finite_input_rejected(self, kernel15):
        with pytest.raises(DomainError):
            kernel15.density(np.array([0.0, np.nan]))


class TestScores:
    def test_frozen_scores(self, kernel15):
        assert abs(kernel15.g(0.5) - G_15_AT_HALF) < 1e-9
        assert abs(kernel15.dg(0.7) - DG_15_AT_07) < 1e-8

    def test_g_odd_k_even(self, kernel15):
        y = np.linspace(0.1, 10, 50)
        assert np.allclose(kernel15.g(y), -kernel15.g(-y), atol=1e-9)
        assert np.allclose(kernel15.k(y), kernel15.k(-y), atol=1e-9)

    def test_g_is_logdensity_derivative(self, kernel15):
        eps = 1e-6
        for y in [0.3, 1.1, 2.5, 6.0]:
            fd = (kernel15.log_density(y + eps) - kernel15.log_density(y - eps)) / (2 * eps)
            assert abs(kernel15.g(y) - fd) < 1e-7

    def test_dg_is_g_derivative(self, kernel15):
        eps = 1e-6
        for y in [0.3, 1.1, 2.5, 6.0]:
            fd = (kernel15.g(y + eps) - kernel15.g(y - eps)) / (2 * eps)
            assert abs(kernel15.dg(y) - fd) < 1e-6

    def test_k_definition(self, kernel15):
        y = np.linspace(-8, 8, 33)
        assert np.allclose(kernel15.k(y), 1.0 + y * kernel15.g(y), atol=1e-12)

    def test_k_tail_limit(self, kernel15):
        # k(y) -> -beta as |y| -> infinity for the power-law tail
        assert abs(kernel15.k(500.0) + 1.5) < 1e-2

    def test_cauchy_scores_closed_form(self, kernel1):
        y = np.linspace(-10, 10, 101)
        assert np.allclose(kernel1.g(y), -2 * y / (1 + y**2), atol=1e-12)
        assert np.allclose(kernel1.k(y), (1 - y**2) / (1 + y**2), atol=1e-12)


class TestInfoConstants:
    def test_beta_one_exact(self, kernel1):
        const = kernel1.info_constants()
        assert abs(const.c_alpha - 0.5) < 1e-6
        assert abs(const.c_gamma - 0.5) < 1e-6

    def test_beta_15_reference_values(self, kernel15):
        const = kernel15.info_constants()
        assert abs(const.c_alpha - 0.4281) < 5e-3
        assert abs(const.c_gamma - 0.9556) < 5e-3

    def test_score_orthogonality(self, kernel15):
        val, _ = quad(
            lambda y: kernel15.g(y) * kernel15.k(y) * kernel15.density(y),
            -40, 40, limit=400,
        )
        assert abs(val) < 1e-8

    def test_information_identity(self, kernel15):
        # integration by parts: int g^2 phi = -int dg phi
        val, _ = quad(lambda y: kernel15.dg(y) * kernel15.density(y), -40, 40, limit=400)
        assert abs(kernel15.info_constants().c_alpha + val) < 5e-6


class TestTailCoefficient:
    def test_cauchy_limit(self):
        assert abs(stable_tail_coefficient(1.0) - 1.0 / math.pi) < 1e-14

    def test_gamma_form(self):
        # c_beta = Gamma(1+beta) sin(beta pi / 2) / pi
        for beta in [1.2, 1.5, 1.8]:
            expected = math.gamma(1 + beta) * math.sin(beta * math.pi / 2) / math.pi
            assert abs(stable_tail_coefficient(beta) - expected) < 1e-13

    def test_invalid_beta(self):
        with pytest.raises(DomainError):
            StableKernel(2.0)
        with pytest.raises(DomainError):
            StableKernel(0.0)
