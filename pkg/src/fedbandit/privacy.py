"""Laplace mechanism and private running means.

Each agent privatizes its within-epoch empirical mean by adding Laplace noise
whose scale shrinks with the number of aggregating agents, the privacy
parameter, and the epoch sample count. Across epochs the noisy means are
folded into a sample-weighted running mean so old rewards are never touched
again. Privatized values are deliberately not clipped back to [0, 1]; the
elimination rule compares them as-is.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_TINY = np.finfo(float).tiny


@dataclass(frozen=True)
class PrivacyParams:
    """Privacy switch and per-agent parameter.

    ``enabled=False`` is the exact no-noise mode (the epsilon -> infinity
    limit) used for oracle tests; epsilon is ignored in that case.
    """

    epsilon: float = 1.0
    enabled: bool = True

    def __post_init__(self):
        if self.enabled and not self.epsilon > 0:
            raise ValueError("epsilon must be positive when noise is enabled")


NO_NOISE = PrivacyParams(epsilon=1.0, enabled=False)


@dataclass(frozen=True)
class HistoricalPrivateMean:
    """Running privatized mean together with its cumulative sample count."""

    value: float = 0.0
    cumulative_samples: int = 0

    def __post_init__(self):
        if self.cumulative_samples < 0:
            raise ValueError("cumulative_samples must be nonnegative")


def laplace_sample(scale: float, rng: np.random.Generator) -> float:
    """One zero-mean Laplace draw via inverse CDF from a single uniform."""
    if not scale > 0:
        raise ValueError("scale must be positive")
    return float(laplace_noise(scale, 1, rng)[0])


def laplace_noise(scale: float, size, rng: np.random.Generator) -> np.ndarray:
    """Vector of zero-mean Laplace draws, one uniform consumed per draw."""
    if not scale > 0:
        raise ValueError("scale must be positive")
    u = rng.random(size) - 0.5
    # p = 1 - 2|u| is the survival mass; guard the measure-zero log(0) corner
    p = np.maximum(1.0 - 2.0 * np.abs(u), _TINY)
    return -scale * np.sign(u) * np.log(p)


def epoch_noise_scale(num_agents: int, epsilon: float, new_samples: int) -> float:
    """Noise scale for one epoch mean: 1 / (agents * epsilon * new samples).

    The reward range is [0, 1], so two epoch histories differing in one
    reward move the mean by at most 1/new_samples; dividing further by the
    number of aggregating agents yields the aggregate-level privacy in use.
    Under partial participation the caller passes the participant count in
    place of the full fleet size.
    """
    if new_samples < 1:
        raise ValueError("new_samples must be >= 1")
    if num_agents < 1:
        raise ValueError("num_agents must be >= 1")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    return 1.0 / (num_agents * epsilon * new_samples)


def privatize_epoch_mean(
    raw_mean: float,
    num_agents: int,
    epsilon: float,
    new_samples: int,
    rng: np.random.Generator,
    enabled: bool = True,
) -> float:
    """Privatize one within-epoch empirical mean."""
    if not enabled:
        if new_samples < 1:
            raise ValueError("new_samples must be >= 1")
        return float(raw_mean)
    scale = epoch_noise_scale(num_agents, epsilon, new_samples)
    return float(raw_mean) + laplace_sample(scale, rng)


def privatize_epoch_means(
    raw_means: np.ndarray,
    num_agents: int,
    epsilon: float,
    new_samples: int,
    rng: np.random.Generator,
    enabled: bool = True,
) -> np.ndarray:
    """Vector form of privatize_epoch_mean over one agent's active arms."""
    raw_means = np.asarray(raw_means, dtype=float)
    if not enabled:
        if new_samples < 1:
            raise ValueError("new_samples must be >= 1")
        return raw_means.copy()
    scale = epoch_noise_scale(num_agents, epsilon, new_samples)
    return raw_means + laplace_noise(scale, raw_means.shape, rng)


def update_historical_mean(
    prev: HistoricalPrivateMean, new_cumulative: int, new_epoch_mean: float
) -> HistoricalPrivateMean:
    """Fold one epoch's privatized mean into the running historical mean.

    The update weights the old value by prev.cumulative_samples/new_cumulative
    and the fresh epoch mean by the remainder, so with noise disabled the
    result equals the plain mean over all samples seen so far.
    """
    if new_cumulative <= prev.cumulative_samples:
        raise ValueError("cumulative sample count must strictly increase")
    value = blend_historical(
        np.asarray(prev.value), prev.cumulative_samples, new_cumulative, np.asarray(new_epoch_mean)
    )
    return HistoricalPrivateMean(value=float(value), cumulative_samples=new_cumulative)


def blend_historical(
    prev_values: np.ndarray,
    prev_cumulative: int,
    new_cumulative: int,
    epoch_means: np.ndarray,
) -> np.ndarray:
    """Array form of the historical-mean recurrence (same arithmetic)."""
    if new_cumulative <= prev_cumulative:
        raise ValueError("cumulative sample count must strictly increase")
    w_old = prev_cumulative / new_cumulative
    w_new = (new_cumulative - prev_cumulative) / new_cumulative
    return w_old * np.asarray(prev_values, dtype=float) + w_new * np.asarray(epoch_means, dtype=float)
