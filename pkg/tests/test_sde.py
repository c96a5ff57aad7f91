"""Euler simulation and thinning."""

import numpy as np
import pytest

from stableql.errors import DomainError, SimulationOverflowError, UsageError
from stableql.models import build_model
from stableql.samplers import NoiseSpec, RngStream
from stableql.sde import FinePath, ObservationSeries, simulate_fine, thin


class TestObservationSeries:
    def test_invariants(self):
        obs = ObservationSeries(x=np.zeros(11), h=0.1, T=1.0, n=10)
        assert np.allclose(obs.times, np.arange(11) * 0.1)

    def test_shape_mismatch(self):
        with pytest.raises(DomainError):
            ObservationSeries(x=np.zeros(10), h=0.1, T=1.0, n=10)

    def test_step_mismatch(self):
        with pytest.raises(DomainError):
            ObservationSeries(x=np.zeros(11), h=0.2, T=1.0, n=10)

    def test_non_finite(self):
        x = np.zeros(11)
        x[3] = np.inf
        with pytest.raises(DomainError):
            ObservationSeries(x=x, h=0.1, T=1.0, n=10)


class TestSimulateFine:
    def test_deterministic_recursion(self):
        # zero noise: x_{k+1} = x_k (1 + a1 * delta) for the linear drift
        model = build_model("ou-const")
        fine = simulate_fine(
            model, NoiseSpec("stable", beta=1.0), T=1.0, n_fine=100, x0=1.0,
            rng=RngStream(0, 0), increments=np.zeros(100),
        )
        assert np.allclose(fine.x, (1 - 0.01) ** np.arange(101))
        assert fine.delta == pytest.approx(0.01)

    def test_pure_noise_telescopes(self):
        # zero drift, unit scale: increments accumulate exactly
        model = build_model(
            drift="a1*0", scale="g1*0+1", p_alpha=1, p_gamma=1,
            bounds=[(-1, 1), (0.5, 2)], theta_true=[0.0, 1.0],
        )
        noise = NoiseSpec("stable", beta=1.5)
        inc = noise.sample(0.01, 200, RngStream(42, 3))
        fine = simulate_fine(model, noise, T=2.0, n_fine=200, x0=0.5,
                             rng=RngStream(42, 3), increments=inc)
        assert np.allclose(np.diff(fine.x), inc)
        assert fine.x[0] == 0.5

    def test_reproducible(self, nonlinear_1d):
        noise = NoiseSpec("nig", eta=5.0)
        a = simulate_fine(nonlinear_1d, noise, 1.0, 500, 0.0, RngStream(9, 1))
        b = simulate_fine(nonlinear_1d, noise, 1.0, 500, 0.0, RngStream(9, 1))
        assert np.array_equal(a.x, b.x)

    def test_overflow_reports_step(self):
        model = build_model(
            drift="a1*x", scale="g1", p_alpha=1, p_gamma=1,
            bounds=[(0, 1e41), (0.5, 2)], theta_true=[1e40, 1.0],
        )
        with pytest.raises(SimulationOverflowError) as exc:
            simulate_fine(model, NoiseSpec("stable", beta=1.5), 10.0, 200, 1.0,
                          RngStream(1, 1))
        assert exc.value.step >= 1

    def test_requires_theta_true(self):
        model = build_model(drift="a1*x", scale="g1", p_alpha=1, p_gamma=1,
                            bounds=[(-2, 0), (0.5, 2)])
        with pytest.raises(UsageError):
            simulate_fine(model, NoiseSpec("stable", beta=1.5), 1.0, 10, 0.0,
                          RngStream(0, 0))

    def test_bad_increment_count(self, nonlinear_1d):
        with pytest.raises(UsageError):
            simulate_fine(nonlinear_1d, NoiseSpec("stable", beta=1.5), 1.0, 10,
                          0.0, RngStream(0, 0), increments=np.zeros(9))


class TestThin:
    def test_thinning_keeps_every_kth(self):
        fine = FinePath(x=np.arange(101, dtype=float), T=1.0, n_fine=100)
        obs = thin(fine, 10)
        assert obs.n == 10
        assert obs.h == pytest.approx(0.1)
        assert np.array_equal(obs.x, np.arange(0, 101, 10))

    def test_factor_one_identity(self):
        fine = FinePath(x=np.linspace(0, 1, 51), T=5.0, n_fine=50)
        obs = thin(fine, 1)
        assert obs.n == 50
        assert np.array_equal(obs.x, fine.x)

    def test_non_divisible_factor(self):
        fine = FinePath(x=np.zeros(101), T=1.0, n_fine=100)
        with pytest.raises(UsageError):
            thin(fine, 3)

    def test_protocol_step_sizes(self):
        # thinning a 150000-step path reproduces the coarse designs exactly
        fine = FinePath(x=np.zeros(150001), T=1.0, n_fine=150000)
        for n, factor in [(500, 300), (1000, 150), (3000, 50)]:
            obs = thin(fine, factor)
            assert obs.n == n
            assert obs.h * n == pytest.approx(1.0)
