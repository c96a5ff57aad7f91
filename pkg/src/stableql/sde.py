"""Euler path simulation on a fine grid and thinning to the observation grid.

Data generation follows the two-stage protocol used throughout the
experiments: simulate on a grid much finer than the observation frequency
(default 50 sub-steps per observation interval), then keep every
``factor``-th point.  The scale coefficient is evaluated at the left end of
each step, matching the predictable integrand of the stochastic integral.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SimulationOverflowError, UsageError
from .models import ModelSpec
from .samplers import NoiseSpec, RngStream

__all__ = ["FinePath", "ObservationSeries", "simulate_fine", "thin"]


@dataclass(frozen=True)
class ObservationSeries:
    """Equidistant records X_{jh}, j = 0..n, over horizon T = n*h."""

    x: np.ndarray
    h: float
    T: float
    n: int

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, float))
        if self.x.shape != (self.n + 1,):
            raise DomainError(
                f"expected {self.n + 1} observations, got shape {self.x.shape}"
            )
        if abs(self.h * self.n - self.T) > 1e-12 * max(1.0, self.T):
            raise DomainError(f"h*n={self.h * self.n} inconsistent with T={self.T}")
        if not np.all(np.isfinite(self.x)):
            raise DomainError("non-finite observation values")

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n + 1) * self.h


@dataclass(frozen=True)
class FinePath:
    """Simulation-resolution path with step delta = T / n_fine."""

    x: np.ndarray
    T: float
    n_fine: int

    @property
    def delta(self) -> float:
        return self.T / self.n_fine


def simulate_fine(
    model: ModelSpec,
    noise: NoiseSpec,
    T: float,
    n_fine: int,
    x0: float,
    rng: RngStream,
    increments: np.ndarray | None = None,
) -> FinePath:
    """Euler scheme for dX = a(X, alpha0) dt + c(X-, gamma0) dJ at theta_true.

    ``increments`` overrides the noise draws (used by deterministic tests and
    common-random-number experiments); otherwise n_fine increments at step
    delta are drawn from the noise spec.
    """
    if model.theta_true is None:
        raise UsageError("simulate_fine requires model.theta_true")
    if n_fine < 1:
        raise DomainError(f"n_fine must be >= 1, got {n_fine}")
    if T <= 0:
        raise DomainError(f"T must be positive, got {T}")
    delta = T / n_fine
    if increments is None:
        increments = noise.sample(delta, n_fine, rng)
    elif len(increments) != n_fine:
        raise UsageError(f"need {n_fine} increments, got {len(increments)}")

    alpha0 = model.theta_true.alpha
    gamma0 = model.theta_true.gamma
    a = model._a
    c = model._c
    x = np.empty(n_fine + 1)
    x[0] = float(x0)
    xk = x[0]
    al = tuple(alpha0)
    ga = tuple(gamma0)
    # overflow is detected explicitly below, so the transient warnings from
    # the scalar coefficient evaluations are suppressed
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n_fine):
            xk = xk + float(a(xk, *al)) * delta + float(c(xk, *ga)) * increments[k]
            if not np.isfinite(xk):
                raise SimulationOverflowError(k + 1, xk)
            x[k + 1] = xk
    return FinePath(x=x, T=T, n_fine=n_fine)


def thin(fine: FinePath, factor: int) -> ObservationSeries:
    """Keep every factor-th point of a fine path."""
    if factor < 1 or fine.n_fine % factor != 0:
        raise UsageError(
            f"thinning factor {factor} must divide the fine step count {fine.n_fine}"
        )
    n = fine.n_fine // factor
    return ObservationSeries(x=fine.x[::factor], h=fine.delta * factor, T=fine.T, n=n)
