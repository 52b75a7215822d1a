"""Elimination protocol runners for three communication structures.

All three runners share the same epoch loop: every agent pulls each active
arm the scheduled number of times, privatizes the epoch mean, folds it into
its historical mean, and the round's aggregated means drive a threshold
elimination. They differ only in how the historical means travel:

* centralized: agents (or a sampled subset) upload to a server that
  aggregates, eliminates, and broadcasts; a round costs no time slots.
* decentralized: agents flood records to neighbors (advertise / request /
  transfer handshake) until everyone holds all records, then each agent
  aggregates and eliminates locally; the flooding slots are spent pulling the
  locally best arm.
* hybrid: components relay records hop by hop to a sink agent, sinks upload
  component averages to the server, the server eliminates and answers each
  component; agents exploit locally while the slowest component syncs.

Time is counted in per-agent slots: one slot is one pull at every agent.
Runs are deterministic functions of (inputs, generator state).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .env import EnvSpec, GapProfile, gap_profile, sample_epoch_mean
from .metrics import CommLedger, RegretTrace
from .privacy import PrivacyParams, blend_historical, privatize_epoch_means
from .schedule import EpochPlan, ScheduleParams, plan_epoch
from .topology import ComponentLayout, Graph, relay_paths

ADV = "adv"
REQ = "req"
DATA = "data"


@dataclass
class AgentState:
    """One agent's view of the run."""

    agent_id: int
    active_set: list[int]
    raw_mean: np.ndarray  # within-epoch empirical means, active entries valid
    private_mean: np.ndarray  # privatized epoch means
    hist_mean: np.ndarray  # running privatized historical means
    hist_samples: int = 0
    observation_list: set[int] = field(default_factory=set)  # record labels held
    records: dict[int, np.ndarray] = field(default_factory=dict)
    fresh: set[int] = field(default_factory=set)  # labels picked up last slot

    @classmethod
    def initial(cls, agent_id: int, num_arms: int) -> "AgentState":
        return cls(
            agent_id=agent_id,
            active_set=list(range(num_arms)),
            raw_mean=np.zeros(num_arms),
            private_mean=np.zeros(num_arms),
            hist_mean=np.zeros(num_arms),
            observation_list={agent_id},
        )

    def local_best(self) -> int:
        """Locally best active arm by own historical mean, ties to lowest index."""
        arms = self.active_set
        return arms[int(np.argmax(self.hist_mean[arms]))]


@dataclass(frozen=True)
class GisMessage:
    """One handshake message: advertise labels, request labels, or carry data."""

    kind: str  # ADV, REQ, or DATA
    sender: int
    receiver: int
    labels: tuple[int, ...]
    records: dict[int, np.ndarray] | None = None


@dataclass(frozen=True)
class RoundOutcome:
    """Bookkeeping for one communication round."""

    round_index: int
    target_gap: float
    cumulative_samples: int
    new_samples: int
    confidence: float
    active_before: tuple[int, ...]
    eliminated: tuple[int, ...]
    active_after: tuple[int, ...]
    delay_slots: int
    time_consumed: int  # |active_before| * new_samples + delay_slots
    t_end: int
    completed: bool
    aggregated: np.ndarray | None  # aggregated means over active_before


@dataclass
class RunResult:
    """Full output of one protocol run."""

    trace: RegretTrace
    ledger: CommLedger
    rounds: list[RoundOutcome]
    final_active: tuple[int, ...]
    total_time: int
    truncated: bool  # the horizon cut exploration or synchronization short
    eliminated_best: bool
    profile: GapProfile
    costs: tuple[float, float]

    @property
    def final_regret(self) -> float:
        return self.trace.total_regret

    @property
    def rounds_used(self) -> int:
        """Completed communication rounds (an interrupted sync does not count)."""
        return sum(1 for r in self.rounds if r.completed)

    @property
    def survivor(self) -> int | None:
        return self.final_active[0] if len(self.final_active) == 1 else None

    def sample_times(self) -> list[int]:
        """Natural CSV sampling grid: start, each round end, final time."""
        times = [0] + [r.t_end for r in self.rounds]
        if times[-1] != self.total_time:
            times.append(self.total_time)
        return times

    def active_sizes(self) -> list[int]:
        sizes = [self.trace.gaps.size] + [len(r.active_after) for r in self.rounds]
        if len(sizes) < len(self.sample_times()):
            sizes.append(len(self.final_active))
        return sizes


@dataclass(frozen=True)
class EliminationResult:
    active: tuple[int, ...]
    eliminated: tuple[int, ...]
    aggregated: np.ndarray


def explore_epoch(
    agent: AgentState,
    env: EnvSpec,
    plan: EpochPlan,
    privacy: PrivacyParams,
    rng: np.random.Generator,
    noise_agents: int | None = None,
    trace: RegretTrace | None = None,
) -> AgentState:
    """Pull every active arm plan.new_samples times and roll the means forward.

    noise_agents is the aggregate size entering the noise scale (the
    participant count under partial participation); it defaults to the full
    fleet size.
    """
    arms = agent.active_set
    if plan.cumulative_samples <= agent.hist_samples:
        raise ValueError("epoch plan does not advance this agent's sample count")
    agents_for_noise = env.num_agents if noise_agents is None else noise_agents
    raw = sample_epoch_mean(env, agent.agent_id, arms, plan.new_samples, rng)
    private = privatize_epoch_means(
        raw, agents_for_noise, privacy.epsilon, plan.new_samples, rng, privacy.enabled
    )
    agent.raw_mean[arms] = raw
    agent.private_mean[arms] = private
    agent.hist_mean[arms] = blend_historical(
        agent.hist_mean[arms], agent.hist_samples, plan.cumulative_samples, private
    )
    agent.hist_samples = plan.cumulative_samples
    if trace is not None:
        for arm in arms:
            trace.record_pulls(agent.agent_id, arm, plan.new_samples)
    return agent


def aggregate_and_eliminate(means, active_set, confidence: float) -> EliminationResult:
    """Average contributed mean vectors and drop clearly trailing arms.

    An arm is removed when the aggregated best exceeds it by at least twice
    the confidence radius; the argmax itself always survives.
    """
    vectors = [np.asarray(v, dtype=float) for v in means]
    if not vectors:
        raise ValueError("need at least one contributed mean vector")
    active = tuple(active_set)
    stack = np.stack(vectors)
    if stack.shape[1] != len(active):
        raise ValueError("contributed vectors must cover the active set")
    aggregated = stack.mean(axis=0)
    keep = aggregated.max() - aggregated < 2.0 * confidence
    new_active = tuple(a for a, k in zip(active, keep) if k)
    eliminated = tuple(a for a, k in zip(active, keep) if not k)
    aggregated.setflags(write=False)
    return EliminationResult(active=new_active, eliminated=eliminated, aggregated=aggregated)


@dataclass
class GisRoundResult:
    delay_slots: int
    completed: bool
    transcript: list[tuple[int, GisMessage]] | None = None


def gis_round(
    graph: Graph,
    agents: list[AgentState],
    ledger: CommLedger,
    round_index: int = 1,
    trace: RegretTrace | None = None,
    t_start: int = 0,
    slot_budget: int | None = None,
    collect_transcript: bool = False,
) -> GisRoundResult:
    """Flood fresh epoch records until every agent holds all of them.

    Each slot an agent advertises its newly acquired record labels to all
    neighbors, neighbors request what they miss (picking the lowest-index
    advertiser so the same record is not transferred twice), and data flows
    back; records therefore advance one hop per slot. Each slot every agent
    also pulls its locally best arm once. A peer link is charged per
    unordered pair that exchanged at least one data message in that slot.
    """
    n = len(agents)
    if graph.num_vertices != n:
        raise ValueError("graph size does not match the agent count")
    for a in agents:
        if a.observation_list != {a.agent_id} or set(a.records) != {a.agent_id}:
            raise ValueError("agents must start a round holding only their own record")
    transcript: list[tuple[int, GisMessage]] | None = [] if collect_transcript else None
    exploit_arms = [a.local_best() for a in agents]
    by_id = {a.agent_id: a for a in agents}
    slots_run = 0
    synced = all(len(a.observation_list) == n for a in agents)
    while not synced:
        if slot_budget is not None and slots_run >= slot_budget:
            break
        if slots_run > graph.num_vertices:
            raise RuntimeError("record flooding failed to synchronize")
        slots_run += 1
        advs: list[GisMessage] = []
        for agent in agents:
            if not agent.fresh:
                continue
            labels = tuple(sorted(agent.fresh))
            for nb in graph.neighbors(agent.agent_id):
                advs.append(GisMessage(ADV, agent.agent_id, nb, labels))
        # each receiver requests every missing label from its lowest-index advertiser
        offers: dict[int, dict[int, int]] = {a.agent_id: {} for a in agents}
        for msg in advs:
            have = by_id[msg.receiver].observation_list
            for label in msg.labels:
                if label in have:
                    continue
                best = offers[msg.receiver].get(label)
                if best is None or msg.sender < best:
                    offers[msg.receiver][label] = msg.sender
        reqs: list[GisMessage] = []
        for receiver, wanted in offers.items():
            by_sender: dict[int, list[int]] = {}
            for label, sender in wanted.items():
                by_sender.setdefault(sender, []).append(label)
            for sender, labels in sorted(by_sender.items()):
                reqs.append(GisMessage(REQ, receiver, sender, tuple(sorted(labels))))
        datas: list[GisMessage] = []
        for req in reqs:
            source = by_id[req.receiver]
            payload = {label: source.records[label].copy() for label in req.labels}
            datas.append(GisMessage(DATA, req.receiver, req.sender, req.labels, payload))
        linked_pairs = set()
        for msg in datas:
            target = by_id[msg.receiver]
            for label, record in msg.records.items():
                target.records[label] = record
                target.observation_list.add(label)
            linked_pairs.add((min(msg.sender, msg.receiver), max(msg.sender, msg.receiver)))
        for i, j in sorted(linked_pairs):
            ledger.add_peer_link(round_index, slots_run, i, j)
        if transcript is not None:
            transcript.extend((slots_run, m) for m in advs + reqs + datas)
        # only this slot's arrivals are fresh, and propagate next slot
        arrived: dict[int, set[int]] = {}
        for msg in datas:
            arrived.setdefault(msg.receiver, set()).update(msg.labels)
        for agent in agents:
            agent.fresh = arrived.get(agent.agent_id, set())
        synced = all(len(a.observation_list) == n for a in agents)
    if trace is not None and slots_run:
        trace.record_exploit_slots(exploit_arms, slots_run, t_start + slots_run)
    return GisRoundResult(delay_slots=slots_run, completed=synced, transcript=transcript)


def prime_gis_records(agents: list[AgentState], active) -> None:
    """Reset observation lists so each agent holds only its fresh epoch record."""
    arms = list(active)
    for a in agents:
        a.records = {a.agent_id: a.hist_mean[arms].copy()}
        a.observation_list = {a.agent_id}
        a.fresh = {a.agent_id}


@dataclass
class CommOutcome:
    contributions: list[np.ndarray] | None  # mean vectors entering aggregation
    delay_slots: int
    completed: bool


class CentralizedComm:
    """Uploads from participating agents, server-side aggregation, broadcast."""

    needs_layout = False

    def communicate(self, round_index, agents, active, plan, trace, ledger, t_start, slot_budget, rng, params):
        m = len(agents)
        if params.participation < 1.0:
            chosen = np.sort(rng.choice(m, size=params.active_agents, replace=False))
        else:
            chosen = np.arange(m)
        arms = list(active)
        for idx in chosen:
            ledger.add_server_link(round_index, 0, agents[idx].agent_id)
        contributions = [agents[idx].hist_mean[arms] for idx in chosen]
        for agent in agents:  # downlink broadcast of the updated active set
            ledger.add_server_link(round_index, 0, agent.agent_id)
        return CommOutcome(contributions=contributions, delay_slots=0, completed=True)


class DecentralizedComm:
    """Record flooding followed by identical local aggregation at every agent."""

    def __init__(self, graph: Graph):
        self.graph = graph

    def communicate(self, round_index, agents, active, plan, trace, ledger, t_start, slot_budget, rng, params):
        prime_gis_records(agents, active)
        res = gis_round(
            self.graph,
            agents,
            ledger,
            round_index=round_index,
            trace=trace,
            t_start=t_start,
            slot_budget=slot_budget,
        )
        if not res.completed:
            return CommOutcome(contributions=None, delay_slots=res.delay_slots, completed=False)
        order = sorted(a.agent_id for a in agents)
        reference = None
        ref_active = None
        for agent in agents:
            stacked = [agent.records[i] for i in order]
            elim = aggregate_and_eliminate(stacked, active, plan.confidence)
            if reference is None:
                reference, ref_active = elim.aggregated, elim.active
            elif not np.array_equal(reference, elim.aggregated) or ref_active != elim.active:
                raise RuntimeError("agents diverged after record synchronization")
        contributions = [agents[0].records[i] for i in order]
        return CommOutcome(contributions=contributions, delay_slots=res.delay_slots, completed=True)


class HybridComm:
    """Hop-by-hop relay to per-component sinks, then a server round over sinks."""

    def __init__(self, layout: ComponentLayout, weighted_average: bool = False):
        self.layout = layout
        self.weighted_average = weighted_average
        # fixed relay schedule: hop h of a record from agent i runs in slot h
        schedule: list[tuple[int, int, int]] = []
        for comp, sub, sink in zip(layout.components, layout.subgraphs, layout.sink_agents):
            local_sink = comp.index(sink)
            paths = relay_paths(sub, local_sink)
            for local_v, path in paths.items():
                for hop in range(1, len(path)):
                    schedule.append((hop, comp[path[hop - 1]], comp[path[hop]]))
        self.hop_schedule = sorted(schedule)

    def communicate(self, round_index, agents, active, plan, trace, ledger, t_start, slot_budget, rng, params):
        delay = self.layout.global_delay
        completed = slot_budget is None or delay <= slot_budget
        slots_run = delay if completed else slot_budget
        for slot, a, b in self.hop_schedule:
            if slot <= slots_run:
                ledger.add_peer_link(round_index, slot, a, b)
        if slots_run:
            exploit_arms = [agent.local_best() for agent in agents]
            trace.record_exploit_slots(exploit_arms, slots_run, t_start + slots_run)
        if not completed:
            return CommOutcome(contributions=None, delay_slots=slots_run, completed=False)
        arms = list(active)
        component_means = []
        for comp in self.layout.components:
            rows = np.stack([agents[i].hist_mean[arms] for i in comp])
            component_means.append(rows.mean(axis=0))
        for sink in self.layout.sink_agents:
            ledger.add_server_link(round_index, delay, sink)
        for sink in self.layout.sink_agents:  # one downlink answer per component
            ledger.add_server_link(round_index, delay, sink)
        if self.weighted_average:
            # size-weighted component average equals the plain all-agent average
            contributions = [agents[i].hist_mean[arms] for i in range(len(agents))]
        else:
            contributions = component_means
        return CommOutcome(contributions=contributions, delay_slots=slots_run, completed=True)


class IsolatedComm:
    """No communication: the agent aggregates only its own record."""

    def communicate(self, round_index, agents, active, plan, trace, ledger, t_start, slot_budget, rng, params):
        arms = list(active)
        return CommOutcome(
            contributions=[agents[0].hist_mean[arms]], delay_slots=0, completed=True
        )


def _truncated_explore(agents, active, new_samples, budget, trace, t_start) -> None:
    """Spend the remaining horizon on an arm-major partial epoch."""
    full_arms, remainder = divmod(budget, new_samples)
    t = t_start
    for j, arm in enumerate(active):
        if j < full_arms:
            count = new_samples
        elif j == full_arms and remainder:
            count = remainder
        else:
            break
        trace.record_uniform_block(arm, count)
        t += count
        trace.checkpoint(t)


def _run_elimination(
    env: EnvSpec,
    params: ScheduleParams,
    privacy: PrivacyParams,
    costs: tuple[float, float],
    rng: np.random.Generator,
    comm,
    agent_ids: list[int] | None = None,
) -> RunResult:
    if params.noise_enabled != privacy.enabled:
        raise ValueError("schedule and privacy noise switches disagree")
    if privacy.enabled and params.epsilon != privacy.epsilon:
        raise ValueError("schedule and privacy epsilon disagree")
    profile = gap_profile(env)
    ids = list(range(env.num_agents)) if agent_ids is None else list(agent_ids)
    horizon = env.horizon
    trace = RegretTrace(profile.gaps, len(ids), horizon)
    ledger = CommLedger()
    agents = [AgentState.initial(i, env.num_arms) for i in ids]
    active = tuple(range(env.num_arms))
    rounds: list[RoundOutcome] = []
    t = 0
    prev_samples = 0
    truncated = False
    eliminated_best = False
    r = 1
    while len(active) > 1 and t < horizon:
        if params.fixed_rounds is not None and r > params.fixed_rounds:
            break
        plan = plan_epoch(params, r, len(active), prev_samples)
        explore_slots = len(active) * plan.new_samples
        if t + explore_slots > horizon:
            _truncated_explore(agents, active, plan.new_samples, horizon - t, trace, t)
            t = horizon
            truncated = True
            break
        for agent in agents:
            explore_epoch(agent, env, plan, privacy, rng, noise_agents=params.active_agents)
        for j, arm in enumerate(active):  # agents pull in lockstep, arm by arm
            trace.record_uniform_block(arm, plan.new_samples)
            trace.checkpoint(t + (j + 1) * plan.new_samples)
        t += explore_slots
        outcome = comm.communicate(
            r, agents, active, plan, trace, ledger, t, horizon - t, rng, params
        )
        t += outcome.delay_slots
        ledger.checkpoint(t)
        trace.checkpoint(t)
        if not outcome.completed:
            truncated = True
            rounds.append(
                RoundOutcome(
                    round_index=r,
                    target_gap=plan.target_gap,
                    cumulative_samples=plan.cumulative_samples,
                    new_samples=plan.new_samples,
                    confidence=plan.confidence,
                    active_before=active,
                    eliminated=(),
                    active_after=active,
                    delay_slots=outcome.delay_slots,
                    time_consumed=explore_slots + outcome.delay_slots,
                    t_end=t,
                    completed=False,
                    aggregated=None,
                )
            )
            break
        elim = aggregate_and_eliminate(outcome.contributions, active, plan.confidence)
        if profile.best_arm in elim.eliminated:
            eliminated_best = True
        rounds.append(
            RoundOutcome(
                round_index=r,
                target_gap=plan.target_gap,
                cumulative_samples=plan.cumulative_samples,
                new_samples=plan.new_samples,
                confidence=plan.confidence,
                active_before=active,
                eliminated=elim.eliminated,
                active_after=elim.active,
                delay_slots=outcome.delay_slots,
                time_consumed=explore_slots + outcome.delay_slots,
                t_end=t,
                completed=True,
                aggregated=elim.aggregated,
            )
        )
        active = elim.active
        for agent in agents:
            agent.active_set = list(active)
        prev_samples = plan.cumulative_samples
        r += 1
    if t < horizon:
        exploit_arms = [agent.local_best() for agent in agents]
        trace.record_exploit_slots(exploit_arms, horizon - t, horizon)
        t = horizon
    return RunResult(
        trace=trace,
        ledger=ledger,
        rounds=rounds,
        final_active=active,
        total_time=t,
        truncated=truncated,
        eliminated_best=eliminated_best,
        profile=profile,
        costs=costs,
    )


def run_cdp_mab(
    env: EnvSpec,
    params: ScheduleParams,
    privacy: PrivacyParams,
    costs: tuple[float, float],
    rng: np.random.Generator,
) -> RunResult:
    """Master-worker elimination with optional partial participation."""
    if params.num_agents != env.num_agents:
        raise ValueError("schedule fleet size does not match the environment")
    return _run_elimination(env, params, privacy, costs, rng, CentralizedComm())


def run_ddp_mab(
    env: EnvSpec,
    graph: Graph,
    params: ScheduleParams,
    privacy: PrivacyParams,
    costs: tuple[float, float],
    rng: np.random.Generator,
) -> RunResult:
    """Decentralized elimination over a connected graph via record flooding."""
    if params.num_agents != env.num_agents:
        raise ValueError("schedule fleet size does not match the environment")
    if graph.num_vertices != env.num_agents:
        raise ValueError("graph size does not match the environment")
    if params.participation != 1.0:
        raise ValueError("partial participation is a centralized-only option")
    return _run_elimination(env, params, privacy, costs, rng, DecentralizedComm(graph))


def run_hdp_mab(
    env: EnvSpec,
    layout: ComponentLayout,
    params: ScheduleParams,
    privacy: PrivacyParams,
    costs: tuple[float, float],
    rng: np.random.Generator,
    weighted_average: bool = False,
) -> RunResult:
    """Two-layer elimination: sink collection per component, then the server."""
    if params.num_agents != env.num_agents:
        raise ValueError("schedule fleet size does not match the environment")
    if layout.num_agents != env.num_agents:
        raise ValueError("component layout does not cover the fleet")
    if params.participation != 1.0:
        raise ValueError("partial participation is a centralized-only option")
    return _run_elimination(
        env, params, privacy, costs, rng, HybridComm(layout, weighted_average)
    )


def run_single_agent(
    env: EnvSpec,
    agent_id: int,
    params: ScheduleParams,
    privacy: PrivacyParams,
    costs: tuple[float, float],
    rng: np.random.Generator,
) -> RunResult:
    """Isolated baseline: one agent eliminates on its own observations.

    Regret is still scored against the global gaps, so under heterogeneous
    means the isolated agent typically converges to its local best arm and
    keeps paying that arm's global gap.
    """
    if not 0 <= agent_id < env.num_agents:
        raise IndexError("agent_id out of range")
    if params.num_agents != 1:
        raise ValueError("single-agent runs require a fleet size of 1 in the schedule")
    return _run_elimination(
        env, params, privacy, costs, rng, IsolatedComm(), agent_ids=[agent_id]
    )
