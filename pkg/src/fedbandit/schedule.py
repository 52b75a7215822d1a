"""Epoch schedules: target gaps, sample counts, and elimination radii.

Two schedule variants are supported. The doubling schedule halves the target
gap every round and runs until one arm is left or the horizon is spent. The
fixed-round schedule spreads a known smallest gap over a budget of R
communication rounds so the last round's target gap lands exactly on that
gap; the gap is oracle information supplied by the experiment driver.

All logarithms are natural logs, matching the exponential tail bounds the
sample counts are derived from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

VARIANT_DOUBLING = "doubling"
VARIANT_FIXED_ROUNDS = "fixed_rounds"


@dataclass(frozen=True)
class ScheduleParams:
    """Inputs shared by every epoch computation.

    participation scales the schedule for partial uploads: only
    ``active_agents`` = ceil(participation * num_agents) means are aggregated
    per round, so each agent must explore proportionally more.
    """

    num_agents: int
    num_arms: int
    horizon: int
    epsilon: float = 1.0
    noise_enabled: bool = True
    participation: float = 1.0
    fixed_rounds: int | None = None  # R; None selects the doubling variant
    round_gap: float | None = None  # smallest gap, required with fixed_rounds

    def __post_init__(self):
        if self.num_agents < 1 or self.num_arms < 2 or self.horizon < 1:
            raise ValueError("need num_agents >= 1, num_arms >= 2, horizon >= 1")
        if not 0.0 < self.participation <= 1.0:
            raise ValueError("participation must lie in (0, 1]")
        if self.noise_enabled and not self.epsilon > 0:
            raise ValueError("epsilon must be positive when noise is enabled")
        if self.fixed_rounds is not None:
            if self.fixed_rounds < 1:
                raise ValueError("fixed_rounds must be >= 1")
            if self.round_gap is None or not 0.0 < self.round_gap < 1.0:
                raise ValueError("fixed_rounds requires round_gap in (0, 1)")

    @property
    def active_agents(self) -> int:
        """Number of agents whose means are aggregated per round."""
        return math.ceil(self.participation * self.num_agents)


@dataclass(frozen=True)
class EpochPlan:
    """Resolved quantities for one epoch."""

    round_index: int
    target_gap: float
    cumulative_samples: int
    new_samples: int
    confidence: float

    def __post_init__(self):
        if self.new_samples < 1:
            raise ValueError("new_samples must be >= 1")


def target_gap(params: ScheduleParams, round_index: int) -> float:
    """Gap scale the schedule aims to resolve in the given round."""
    if round_index < 1:
        raise ValueError("round_index must be >= 1")
    if params.fixed_rounds is None:
        return 2.0 ** (-round_index)
    return params.round_gap ** (round_index / params.fixed_rounds)


def cumulative_samples(
    params: ScheduleParams,
    round_index: int,
    active_set_size: int,
    prev_samples: int = 0,
) -> int:
    """Per-agent pulls of each active arm required by the end of the round.

    The count is the larger of the reward-concentration requirement and the
    noise-concentration requirement, rounded up and forced strictly above the
    previous round's count.
    """
    if active_set_size < 1:
        raise ValueError("active_set_size must be >= 1")
    agents = params.active_agents
    gap = target_gap(params, round_index)
    r, t = round_index, params.horizon
    hoeffding = 8.0 * math.log(8.0 * active_set_size * r * r * t) / (agents * gap * gap)
    need = hoeffding
    if params.noise_enabled:
        noise = (
            8.0
            * r
            * math.sqrt(2.0 * math.log(8.0 * params.num_arms * r * r * t))
            / (agents**1.5 * params.epsilon * gap)
        )
        need = max(hoeffding, noise)
    return max(math.ceil(need), prev_samples + 1)


def confidence_radius(
    params: ScheduleParams,
    round_index: int,
    cum_samples: int,
    active_set_size: int,
) -> float:
    """Elimination radius: reward-deviation term plus accumulated-noise term."""
    if cum_samples < 1:
        raise ValueError("cum_samples must be >= 1")
    if active_set_size < 1:
        raise ValueError("active_set_size must be >= 1")
    agents = params.active_agents
    r, t = round_index, params.horizon
    radius = math.sqrt(
        math.log(8.0 * active_set_size * r * r * t) / (2.0 * agents * cum_samples)
    )
    if params.noise_enabled:
        radius += (
            r
            * math.sqrt(8.0 * math.log(8.0 * params.num_arms * r * r * t))
            / (agents**1.5 * params.epsilon * cum_samples)
        )
    return radius


def plan_epoch(
    params: ScheduleParams,
    round_index: int,
    active_set_size: int,
    prev_samples: int,
) -> EpochPlan:
    """Bundle gap, sample counts, and radius for one epoch."""
    cum = cumulative_samples(params, round_index, active_set_size, prev_samples)
    return EpochPlan(
        round_index=round_index,
        target_gap=target_gap(params, round_index),
        cumulative_samples=cum,
        new_samples=cum - prev_samples,
        confidence=confidence_radius(params, round_index, cum, active_set_size),
    )
