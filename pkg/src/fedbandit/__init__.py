"""Deterministic simulator for private, communication-efficient federated bandits."""

from .env import (
    BERNOULLI,
    BOUNDED_UNIFORM,
    EnvConfig,
    EnvSpec,
    GapProfile,
    build_env,
    gap_profile,
    sample_epoch_mean,
    sample_reward,
)
from .metrics import (
    CommLedger,
    RegretTrace,
    RunSummary,
    replay_counts,
    summarize,
    total_cost,
    write_summary_csv,
    write_trace_csv,
)
from .privacy import (
    NO_NOISE,
    HistoricalPrivateMean,
    PrivacyParams,
    epoch_noise_scale,
    laplace_noise,
    laplace_sample,
    privatize_epoch_mean,
    privatize_epoch_means,
    update_historical_mean,
)
from .protocols import (
    AgentState,
    GisMessage,
    RoundOutcome,
    RunResult,
    aggregate_and_eliminate,
    explore_epoch,
    gis_round,
    run_cdp_mab,
    run_ddp_mab,
    run_hdp_mab,
    run_single_agent,
)
from .schedule import (
    EpochPlan,
    ScheduleParams,
    confidence_radius,
    cumulative_samples,
    plan_epoch,
    target_gap,
)
from .topology import (
    ComponentLayout,
    Graph,
    build_component_layout,
    build_topology,
    diameter,
    edge_list_text,
    find_sink_agents,
    shortest_paths,
    singleton_layout,
)

__version__ = "0.1.0"
