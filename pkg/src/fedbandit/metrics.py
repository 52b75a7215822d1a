"""Regret and communication-cost accounting.

Regret is pseudo-regret: every pull of arm k adds that arm's true global gap,
so the trace is exact under known means and carries no reward noise. The
ledger stores one entry per charged communication link; totals are kept
incrementally and can always be replayed from the raw entries.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

SERVER_AGENT = "server-agent"  # charged at cost c1
AGENT_AGENT = "agent-agent"  # charged at cost c2
SERVER = -1  # endpoint id used for the server side of a c1 link


class RegretTrace:
    """Cumulative pseudo-regret with per-agent decomposition.

    Checkpoints pin the exact cumulative value at block boundaries; within a
    checkpointed block the per-slot increment is constant, so linear
    interpolation between checkpoints reproduces the per-slot curve.
    """

    def __init__(self, gaps: np.ndarray, num_agents: int, horizon: int):
        self.gaps = np.asarray(gaps, dtype=float)
        self.num_agents = num_agents
        self.horizon = horizon
        self.total_regret = 0.0
        self.per_agent = np.zeros(num_agents)
        self.total_pulls = 0
        self._times = [0]
        self._values = [0.0]

    def record_pull(self, agent: int, arm: int, t: int) -> None:
        """Record a single pull at per-agent slot t."""
        if t > self.horizon:
            raise ValueError("pull recorded beyond the horizon")
        gap = float(self.gaps[arm])
        self.total_regret += gap
        self.per_agent[agent] += gap
        self.total_pulls += 1
        self.checkpoint_at(t, self.total_regret)

    def record_pulls(self, agent: int, arm: int, count: int) -> None:
        """Bulk-record pulls without a checkpoint (caller pins the timeline)."""
        gap = float(self.gaps[arm])
        self.total_regret += count * gap
        self.per_agent[agent] += count * gap
        self.total_pulls += count

    def record_uniform_block(self, arm: int, count: int) -> None:
        """Every agent pulls the same arm count times (lockstep exploration)."""
        gap = float(self.gaps[arm])
        self.total_regret += self.num_agents * count * gap
        self.per_agent += count * gap
        self.total_pulls += self.num_agents * count

    def record_exploit_slots(self, arms_by_agent, num_slots: int, t_end: int) -> None:
        """All agents pull their chosen arm once per slot for num_slots slots."""
        if num_slots == 0:
            return
        arms = np.asarray(arms_by_agent, dtype=int)
        gaps = self.gaps[arms]
        self.total_regret += num_slots * float(gaps.sum())
        self.per_agent += num_slots * gaps
        self.total_pulls += num_slots * arms.size
        self.checkpoint_at(t_end, self.total_regret)

    def checkpoint_at(self, t: int, value: float) -> None:
        if t < self._times[-1]:
            raise ValueError("checkpoints must be nondecreasing in time")
        if t == self._times[-1]:
            self._values[-1] = value
            return
        self._times.append(t)
        self._values.append(value)

    def checkpoint(self, t: int) -> None:
        self.checkpoint_at(t, self.total_regret)

    def value_at(self, t) -> np.ndarray:
        """Cumulative regret at (vectorized) per-agent slot times."""
        return np.interp(t, self._times, self._values)

    @property
    def checkpoints(self) -> list[tuple[int, float]]:
        return list(zip(self._times, self._values))


@dataclass(frozen=True)
class LedgerEntry:
    round_index: int
    slot: int
    kind: str  # SERVER_AGENT or AGENT_AGENT
    a: int  # SERVER for the server side of a c1 link
    b: int


class CommLedger:
    """Append-only log of charged communication links."""

    def __init__(self):
        self.entries: list[LedgerEntry] = []
        self.server_links = 0
        self.peer_links = 0
        self._times = [0]
        self._server_cum = [0]
        self._peer_cum = [0]

    def add_server_link(self, round_index: int, slot: int, agent: int) -> None:
        self.entries.append(LedgerEntry(round_index, slot, SERVER_AGENT, SERVER, agent))
        self.server_links += 1

    def add_peer_link(self, round_index: int, slot: int, a: int, b: int) -> None:
        self.entries.append(LedgerEntry(round_index, slot, AGENT_AGENT, min(a, b), max(a, b)))
        self.peer_links += 1

    def checkpoint(self, t: int) -> None:
        """Pin cumulative link counts at per-agent slot time t."""
        if t < self._times[-1]:
            raise ValueError("checkpoints must be nondecreasing in time")
        if t == self._times[-1]:
            self._server_cum[-1] = self.server_links
            self._peer_cum[-1] = self.peer_links
            return
        self._times.append(t)
        self._server_cum.append(self.server_links)
        self._peer_cum.append(self.peer_links)

    def counts_at(self, t: int) -> tuple[int, int]:
        """Cumulative (c1, c2) link counts charged up to slot time t."""
        idx = int(np.searchsorted(self._times, t, side="right")) - 1
        return self._server_cum[idx], self._peer_cum[idx]

    def entries_for_round(self, round_index: int) -> list[LedgerEntry]:
        return [e for e in self.entries if e.round_index == round_index]


def replay_counts(ledger: CommLedger) -> tuple[int, int]:
    """Recount links from the raw entries, independent of running totals."""
    server = sum(1 for e in ledger.entries if e.kind == SERVER_AGENT)
    peer = sum(1 for e in ledger.entries if e.kind == AGENT_AGENT)
    return server, peer


def total_cost(ledger: CommLedger, c1: float, c2: float) -> float:
    """Total communication cost: c1 per server link plus c2 per peer link."""
    return c1 * ledger.server_links + c2 * ledger.peer_links


@dataclass(frozen=True)
class RunSummary:
    """Elementwise statistics of final regret and final cost over replications."""

    replications: int
    regret_mean: float
    regret_std: float
    regret_min: float
    regret_max: float
    cost_mean: float
    cost_std: float
    cost_min: float
    cost_max: float


def summarize(final_regrets, final_costs) -> RunSummary:
    """Mean/std/min/max of per-replication final regret and cost."""
    regrets = np.asarray(list(final_regrets), dtype=float)
    costs = np.asarray(list(final_costs), dtype=float)
    if regrets.size == 0 or regrets.size != costs.size:
        raise ValueError("need at least one replication with matching regret/cost")
    return RunSummary(
        replications=int(regrets.size),
        regret_mean=float(regrets.mean()),
        regret_std=float(regrets.std()),
        regret_min=float(regrets.min()),
        regret_max=float(regrets.max()),
        cost_mean=float(costs.mean()),
        cost_std=float(costs.std()),
        cost_min=float(costs.min()),
        cost_max=float(costs.max()),
    )


TRACE_COLUMNS = (
    "t",
    "cumulative_regret",
    "cumulative_cost_c1_units",
    "cumulative_cost_c2_units",
    "active_set_size",
)

SUMMARY_COLUMNS = (
    "replications",
    "regret_mean",
    "regret_std",
    "regret_min",
    "regret_max",
    "cost_mean",
    "cost_std",
    "cost_min",
    "cost_max",
)


def write_trace_csv(path, sample_times, trace: RegretTrace, ledger: CommLedger, active_sizes) -> None:
    """One row per sampled time point, column order fixed by TRACE_COLUMNS."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for t, size in zip(sample_times, active_sizes):
            c1_units, c2_units = ledger.counts_at(t)
            writer.writerow([t, repr(float(trace.value_at(t))), c1_units, c2_units, size])


def write_summary_csv(path, summary: RunSummary) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        writer.writerow(
            [
                summary.replications,
                repr(summary.regret_mean),
                repr(summary.regret_std),
                repr(summary.regret_min),
                repr(summary.regret_max),
                repr(summary.cost_mean),
                repr(summary.cost_std),
                repr(summary.cost_min),
                repr(summary.cost_max),
            ]
        )
