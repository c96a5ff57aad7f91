"""Increment samplers for the driving Levy processes.

Two noise families are supported: the standard symmetric beta-stable law
(polar/CMS transform, exact) and the symmetric normal-inverse-Gaussian law
(Gaussian variance mixture with an inverse-Gaussian subordinator drawn by
the Michael-Schucany-Haas method).

Randomness comes from counter-based Philox streams keyed by
(seed, stream_id, purpose): identical keys reproduce identical sequences
bit-for-bit and distinct keys give statistically independent streams, so
Monte Carlo replicates can run in parallel without shared state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = ["RngStream", "NoiseSpec", "sample_stable", "sample_nig", "sample_inverse_gaussian"]


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0

    def generator(self, purpose: int = 0) -> np.random.Generator:
        seq = np.random.SeedSequence((self.seed, self.stream_id, purpose))
        return np.random.Generator(np.random.Philox(seed=seq))

    def substream(self, purpose: int) -> "RngStream":
        """Derived stream for a distinct purpose within the same replicate."""
        return RngStream(self.seed, self.stream_id * 1009 + purpose + 1)


@dataclass(frozen=True)
class NoiseSpec:
    """Driving-noise family: kind 'stable' with index beta, or 'nig' with
    steepness eta (law NIG(eta, 0, t, 0) at time t, variance t/eta)."""

    kind: str
    beta: float | None = None
    eta: float | None = None

    def __post_init__(self):
        if self.kind == "stable":
            if self.beta is None or not (0.0 < self.beta < 2.0):
                raise DomainError(f"stable noise requires beta in (0,2), got {self.beta}")
        elif self.kind == "nig":
            if self.eta is None or self.eta <= 0:
                raise DomainError(f"nig noise requires eta > 0, got {self.eta}")
        else:
            raise DomainError(f"unknown noise kind {self.kind!r}")

    def sample(self, dt: float, count: int, rng: RngStream) -> np.ndarray:
        if self.kind == "stable":
            return sample_stable(self.beta, dt, count, rng)
        return sample_nig(self.eta, dt, count, rng)


def sample_stable(beta: float, dt: float, count: int, rng: RngStream) -> np.ndarray:
    """Increments over step dt of the standard symmetric beta-stable process.

    Each draw has characteristic function exp(-dt |u|^beta), i.e. equals
    dt^(1/beta) times a standard S_beta variate (strict self-similarity).
    """
    if not (0.0 < beta < 2.0):
        raise DomainError(f"beta must be in (0,2), got {beta}")
    if dt <= 0 or not np.isfinite(dt):
        raise DomainError(f"dt must be positive, got {dt}")
    if count < 0:
        raise DomainError(f"count must be nonnegative, got {count}")
    gen = rng.generator()
    v = gen.uniform(-np.pi / 2.0, np.pi / 2.0, size=count)
    if beta == 1.0:
        # exact Cauchy branch; avoids the removable singularity of the
        # general polar transform at beta = 1
        x = np.tan(v)
    else:
        w = gen.standard_exponential(size=count)
        x = (
            np.sin(beta * v)
            / np.cos(v) ** (1.0 / beta)
            * (np.cos((1.0 - beta) * v) / w) ** ((1.0 - beta) / beta)
        )
    return dt ** (1.0 / beta) * x


def sample_inverse_gaussian(mean: float, shape: float, count: int, rng: RngStream) -> np.ndarray:
    """Inverse-Gaussian draws IG(mean, shape), all strictly positive."""
    if mean <= 0 or shape <= 0:
        raise DomainError(f"mean and shape must be positive, got ({mean}, {shape})")
    if count < 0:
        raise DomainError(f"count must be nonnegative, got {count}")
    gen = rng.generator()
    return _inverse_gaussian(mean, shape, count, gen)


def _inverse_gaussian(mean: float, shape: float, count: int, gen: np.random.Generator) -> np.ndarray:
    y = gen.standard_normal(size=count) ** 2
    u = gen.uniform(size=count)
    x = mean + mean**2 * y / (2.0 * shape) - mean / (2.0 * shape) * np.sqrt(
        4.0 * mean * shape * y + mean**2 * y**2
    )
    accept = u <= mean / (mean + x)
    return np.where(accept, x, mean**2 / x)


def sample_nig(eta: float, dt: float, count: int, rng: RngStream) -> np.ndarray:
    """Increments over step dt of the symmetric NIG process.

    Law NIG(eta, 0, dt, 0): Gaussian with inverse-Gaussian mixing variance
    IG(dt/eta, dt^2); symmetric, mean 0, variance dt/eta.
    """
    if eta <= 0:
        raise DomainError(f"eta must be positive, got {eta}")
    if dt <= 0 or not np.isfinite(dt):
        raise DomainError(f"dt must be positive, got {dt}")
    if count < 0:
        raise DomainError(f"count must be nonnegative, got {count}")
    gen = rng.generator()
    mixing = _inverse_gaussian(dt / eta, dt**2, count, gen)
    return np.sqrt(mixing) * gen.standard_normal(size=count)
