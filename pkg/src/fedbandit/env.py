"""Stochastic bandit environments shared by a fleet of agents.

An environment is a fixed matrix of per-agent arm means on [0, 1] together
with a reward law (Bernoulli or a mean-matched bounded uniform). Agents may
all see the same means (homogeneous) or each see their own row
(heterogeneous); in the latter case the learning target is the arm whose
across-agent average mean is highest.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

BERNOULLI = "bernoulli"
BOUNDED_UNIFORM = "bounded_uniform"
REWARD_KINDS = (BERNOULLI, BOUNDED_UNIFORM)

MEAN_MODE_EXPLICIT = "explicit"
MEAN_MODE_RANDOM_HOMOGENEOUS = "random_homogeneous"
MEAN_MODE_RANDOM_HETEROGENEOUS = "random_heterogeneous"
MEAN_MODES = (
    MEAN_MODE_EXPLICIT,
    MEAN_MODE_RANDOM_HOMOGENEOUS,
    MEAN_MODE_RANDOM_HETEROGENEOUS,
)


@dataclass(frozen=True)
class EnvConfig:
    """Description of an environment prior to construction."""

    num_agents: int
    num_arms: int
    horizon: int
    reward_kind: str = BERNOULLI
    mean_mode: str = MEAN_MODE_RANDOM_HOMOGENEOUS
    means: object = None  # explicit mode: (K,) row or (M, K) matrix


@dataclass(frozen=True)
class EnvSpec:
    """Immutable environment: M agents, K arms, mean matrix, reward law."""

    num_agents: int
    num_arms: int
    means: np.ndarray  # (M, K), entries in [0, 1]
    reward_kind: str
    horizon: int

    def __post_init__(self):
        means = np.asarray(self.means, dtype=float)
        if means.shape != (self.num_agents, self.num_arms):
            raise ValueError(
                f"means shape {means.shape} does not match "
                f"(num_agents={self.num_agents}, num_arms={self.num_arms})"
            )
        if self.num_agents < 2:
            raise ValueError("num_agents must be >= 2")
        if self.num_arms < 2:
            raise ValueError("num_arms must be >= 2")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.reward_kind not in REWARD_KINDS:
            raise ValueError(f"unknown reward_kind {self.reward_kind!r}")
        if np.any(means < 0.0) or np.any(means > 1.0):
            raise ValueError("all arm means must lie in [0, 1]")
        means.setflags(write=False)
        object.__setattr__(self, "means", means)

    @property
    def homogeneous(self) -> bool:
        return bool(np.all(self.means == self.means[0]))


@dataclass(frozen=True)
class GapProfile:
    """True global means, best arm, and suboptimality gaps of an environment."""

    global_means: np.ndarray  # (K,)
    best_arm: int
    gaps: np.ndarray  # (K,), gaps[best_arm] == 0
    min_gap: float  # smallest nonzero gap

    def __post_init__(self):
        for name in ("global_means", "gaps"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def gap_profile(env: EnvSpec) -> GapProfile:
    """Compute global means and gaps; reject environments with a tied best arm.

    Global means average the per-agent means, which in homogeneous mode equals
    the shared row. The best arm must be strictly unique, otherwise the
    minimal nonzero gap is undefined and the environment is unusable.
    """
    global_means = env.means.mean(axis=0)
    best = int(np.argmax(global_means))
    if np.count_nonzero(global_means == global_means[best]) > 1:
        raise ValueError("no unique best arm: the maximum global mean is tied")
    gaps = global_means[best] - global_means
    min_gap = float(np.min(gaps[gaps > 0]))
    return GapProfile(global_means=global_means, best_arm=best, gaps=gaps, min_gap=min_gap)


def build_env(config: EnvConfig, rng_seed: int) -> EnvSpec:
    """Construct an EnvSpec from a config; random means are pure in rng_seed."""
    if config.mean_mode not in MEAN_MODES:
        raise ValueError(f"unknown mean_mode {config.mean_mode!r}")
    m, k = config.num_agents, config.num_arms
    if m < 2 or k < 2:
        raise ValueError("environment requires num_agents >= 2 and num_arms >= 2")
    rng = np.random.default_rng(rng_seed)
    if config.mean_mode == MEAN_MODE_EXPLICIT:
        if config.means is None:
            raise ValueError("explicit mean_mode requires a means array")
        means = np.asarray(config.means, dtype=float)
        if means.ndim == 1:
            means = np.tile(means, (m, 1))
    elif config.mean_mode == MEAN_MODE_RANDOM_HOMOGENEOUS:
        means = np.tile(rng.random(k), (m, 1))
    else:
        means = rng.random((m, k))
    env = EnvSpec(
        num_agents=m,
        num_arms=k,
        means=means,
        reward_kind=config.reward_kind,
        horizon=config.horizon,
    )
    gap_profile(env)  # reject degenerate ties at build time
    return env


def _uniform_halfwidth(mean: np.ndarray) -> np.ndarray:
    # widest symmetric interval around the mean still inside [0, 1]
    return np.minimum(mean, 1.0 - mean)


def sample_reward(env: EnvSpec, agent: int, arm: int, rng: np.random.Generator) -> float:
    """Draw one reward for (agent, arm); exactly one uniform is consumed."""
    if not 0 <= agent < env.num_agents:
        raise IndexError(f"agent index {agent} out of range")
    if not 0 <= arm < env.num_arms:
        raise IndexError(f"arm index {arm} out of range")
    mean = float(env.means[agent, arm])
    u = rng.random()
    if env.reward_kind == BERNOULLI:
        return 1.0 if u < mean else 0.0
    half = min(mean, 1.0 - mean)
    return mean + half * (2.0 * u - 1.0)


_UNIFORM_CHUNK = 1 << 22  # cap on scratch draws per bounded-uniform batch


def sample_epoch_mean(
    env: EnvSpec,
    agent: int,
    arms: np.ndarray | list[int],
    num_pulls: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Sample the empirical mean of ``num_pulls`` rewards for each arm.

    Bernoulli arms draw the epoch sum directly from the binomial law, which is
    exact and keeps large epochs cheap. Bounded-uniform arms accumulate the
    pulls in chunks.
    """
    if not 0 <= agent < env.num_agents:
        raise IndexError(f"agent index {agent} out of range")
    if num_pulls < 1:
        raise ValueError("num_pulls must be >= 1")
    arms = np.asarray(arms, dtype=int)
    means = env.means[agent, arms]
    if env.reward_kind == BERNOULLI:
        return rng.binomial(num_pulls, means).astype(float) / num_pulls
    half = _uniform_halfwidth(means)
    total = np.zeros(arms.size)
    chunk = max(1, _UNIFORM_CHUNK // max(arms.size, 1))
    done = 0
    while done < num_pulls:
        step = min(chunk, num_pulls - done)
        u = rng.random((step, arms.size))
        total += (means + half * (2.0 * u - 1.0)).sum(axis=0)
        done += step
    return total / num_pulls
