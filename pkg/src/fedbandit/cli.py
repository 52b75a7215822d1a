"""Experiment runner: YAML config in, per-replication and summary CSVs out.

A config document describes one experiment cell (environment, algorithm,
topology or component layout, costs, replication count, base seed). An
optional ``sweep`` block maps dot-paths to value lists and expands to the
cross product of cells. Replication seeds are derived by hashing
(base_seed, replication index) only, so the same replication index plays the
same random draws in every cell (paired sweeps) and removing a cell never
perturbs another cell's outputs.

Exit codes: 0 success, 1 config error, 2 one or more cells failed at runtime.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import itertools
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .env import (
    MEAN_MODES,
    REWARD_KINDS,
    EnvConfig,
    build_env,
    gap_profile,
)
from .metrics import summarize, total_cost, write_summary_csv, write_trace_csv
from .privacy import PrivacyParams
from .protocols import (
    RunResult,
    run_cdp_mab,
    run_ddp_mab,
    run_hdp_mab,
    run_single_agent,
)
from .schedule import ScheduleParams
from .topology import GRAPH_KINDS, build_component_layout, build_topology

CENTRALIZED = "centralized"
DECENTRALIZED = "decentralized"
HYBRID = "hybrid"
SINGLE = "single"
STRUCTURES = (CENTRALIZED, DECENTRALIZED, HYBRID, SINGLE)


@dataclass(frozen=True)
class EnvironmentBlock:
    num_agents: int
    num_arms: int
    horizon: int
    reward_kind: str
    mean_mode: str
    means: object = None


@dataclass(frozen=True)
class AlgorithmBlock:
    structure: str
    noise_enabled: bool = True
    epsilon: float | None = None
    participation: float = 1.0
    rounds: int | None = None
    weighted_component_average: bool = False
    agent_index: int = 0


@dataclass(frozen=True)
class TopologyBlock:
    kind: str
    degree: int | None = None
    edge_prob: float | None = None


@dataclass(frozen=True)
class ComponentBlock:
    size: int
    kind: str
    degree: int | None = None
    edge_prob: float | None = None


@dataclass(frozen=True)
class CostsBlock:
    c1: float
    c2: float


@dataclass(frozen=True)
class ExperimentConfig:
    environment: EnvironmentBlock
    algorithm: AlgorithmBlock
    costs: CostsBlock
    replications: int
    base_seed: int
    topology: TopologyBlock | None = None
    components: tuple[ComponentBlock, ...] | None = None
    output_dir: str = "results"


def _get(raw: dict, block: str, key: str, default=None):
    return raw.get(block, {}).get(key, default)


def parse_config(raw: dict) -> tuple[ExperimentConfig | None, list[str]]:
    """Build a typed config from a raw mapping, collecting diagnostics."""
    diags: list[str] = []
    if not isinstance(raw, dict):
        return None, ["config root must be a mapping"]
    for block in ("environment", "algorithm", "costs"):
        if not isinstance(raw.get(block), dict):
            diags.append(f"{block}: missing or not a mapping")
    if diags:
        return None, diags

    env = EnvironmentBlock(
        num_agents=_get(raw, "environment", "num_agents", 0),
        num_arms=_get(raw, "environment", "num_arms", 0),
        horizon=_get(raw, "environment", "horizon", 0),
        reward_kind=_get(raw, "environment", "reward_kind", "bernoulli"),
        mean_mode=_get(raw, "environment", "mean_mode", "random_homogeneous"),
        means=_get(raw, "environment", "means"),
    )
    if not isinstance(env.num_agents, int) or env.num_agents < 2:
        diags.append("environment.num_agents: must be an integer >= 2")
    if not isinstance(env.num_arms, int) or env.num_arms < 2:
        diags.append("environment.num_arms: must be an integer >= 2")
    if not isinstance(env.horizon, int) or env.horizon < 1:
        diags.append("environment.horizon: must be an integer >= 1")
    if env.reward_kind not in REWARD_KINDS:
        diags.append(f"environment.reward_kind: must be one of {REWARD_KINDS}")
    if env.mean_mode not in MEAN_MODES:
        diags.append(f"environment.mean_mode: must be one of {MEAN_MODES}")
    if env.mean_mode == "explicit":
        if env.means is None:
            diags.append("environment.means: required for explicit mean_mode")
        else:
            arr = np.asarray(env.means, dtype=float)
            if arr.ndim not in (1, 2):
                diags.append("environment.means: must be a vector or matrix")
            elif np.any(arr < 0) or np.any(arr > 1):
                diags.append("environment.means: entries must lie in [0, 1]")

    alg = AlgorithmBlock(
        structure=_get(raw, "algorithm", "structure", CENTRALIZED),
        noise_enabled=_get(raw, "algorithm", "noise_enabled", True),
        epsilon=_get(raw, "algorithm", "epsilon"),
        participation=_get(raw, "algorithm", "participation", 1.0),
        rounds=_get(raw, "algorithm", "rounds"),
        weighted_component_average=_get(raw, "algorithm", "weighted_component_average", False),
        agent_index=_get(raw, "algorithm", "agent_index", 0),
    )
    if alg.structure not in STRUCTURES:
        diags.append(f"algorithm.structure: must be one of {STRUCTURES}")
    if alg.noise_enabled and (alg.epsilon is None or not alg.epsilon > 0):
        diags.append("algorithm.epsilon: a positive value is required when noise is enabled")
    if not isinstance(alg.participation, (int, float)) or not 0.0 < alg.participation <= 1.0:
        diags.append("algorithm.participation: must lie in (0, 1] so at least one agent uploads")
    if alg.participation != 1.0 and alg.structure != CENTRALIZED:
        diags.append("algorithm.participation: partial participation applies to the centralized structure only")
    if alg.rounds is not None and (not isinstance(alg.rounds, int) or alg.rounds < 1):
        diags.append("algorithm.rounds: must be an integer >= 1 when set")
    if alg.structure == SINGLE and not (
        isinstance(alg.agent_index, int) and 0 <= alg.agent_index < max(env.num_agents, 1)
    ):
        diags.append("algorithm.agent_index: must index an agent of the environment")

    topo = None
    if alg.structure == DECENTRALIZED:
        if not isinstance(raw.get("topology"), dict):
            diags.append("topology: required for the decentralized structure")
        else:
            topo = TopologyBlock(
                kind=_get(raw, "topology", "kind", ""),
                degree=_get(raw, "topology", "degree"),
                edge_prob=_get(raw, "topology", "edge_prob"),
            )
            diags.extend(_check_graph("topology", topo.kind, env.num_agents, topo.degree, topo.edge_prob))

    components = None
    if alg.structure == HYBRID:
        raw_components = raw.get("components")
        if not isinstance(raw_components, list) or not raw_components:
            diags.append("components: a nonempty list is required for the hybrid structure")
        else:
            parsed = []
            for idx, item in enumerate(raw_components):
                if not isinstance(item, dict):
                    diags.append(f"components[{idx}]: must be a mapping")
                    continue
                comp = ComponentBlock(
                    size=item.get("size", 0),
                    kind=item.get("kind", "complete"),
                    degree=item.get("degree"),
                    edge_prob=item.get("edge_prob"),
                )
                if not isinstance(comp.size, int) or comp.size < 1:
                    diags.append(f"components[{idx}].size: must be an integer >= 1")
                elif comp.size > 1:
                    diags.extend(
                        _check_graph(f"components[{idx}]", comp.kind, comp.size, comp.degree, comp.edge_prob)
                    )
                parsed.append(comp)
            components = tuple(parsed)
            total = sum(c.size for c in parsed)
            if total != env.num_agents:
                diags.append(
                    f"components: sizes sum to {total} but environment.num_agents is {env.num_agents}"
                )

    costs = CostsBlock(c1=_get(raw, "costs", "c1", None), c2=_get(raw, "costs", "c2", None))
    if not isinstance(costs.c1, (int, float)) or costs.c1 < 0:
        diags.append("costs.c1: must be a nonnegative number")
    if not isinstance(costs.c2, (int, float)) or costs.c2 < 0:
        diags.append("costs.c2: must be a nonnegative number")

    replications = raw.get("replications", 1)
    if not isinstance(replications, int) or replications < 1:
        diags.append("replications: must be an integer >= 1")
    base_seed = raw.get("base_seed", 0)
    if not isinstance(base_seed, int):
        diags.append("base_seed: must be an integer")
    output_dir = raw.get("output_dir", "results")

    if diags:
        return None, diags
    return (
        ExperimentConfig(
            environment=env,
            algorithm=alg,
            costs=costs,
            replications=replications,
            base_seed=base_seed,
            topology=topo,
            components=components,
            output_dir=str(output_dir),
        ),
        [],
    )


def _check_graph(prefix: str, kind: str, size: int, degree, edge_prob) -> list[str]:
    diags = []
    if kind not in GRAPH_KINDS:
        diags.append(f"{prefix}.kind: must be one of {GRAPH_KINDS}")
        return diags
    if kind == "ring" and size < 3:
        diags.append(f"{prefix}.kind: a ring needs at least 3 vertices")
    if kind == "d_regular":
        if not isinstance(degree, int) or degree < 1:
            diags.append(f"{prefix}.degree: required for d_regular graphs")
        elif degree >= size or (degree * size) % 2 != 0:
            diags.append(
                f"{prefix}.degree: no {degree}-regular graph on {size} vertices exists "
                "(need degree < size and degree*size even)"
            )
    if kind == "random" and (
        not isinstance(edge_prob, (int, float)) or not 0.0 < edge_prob <= 1.0
    ):
        diags.append(f"{prefix}.edge_prob: required in (0, 1] for random graphs")
    return diags


def derive_seeds(base_seed: int, replication: int) -> tuple[int, int, int]:
    """Stable (environment, topology, run) seeds for one replication."""
    digest = hashlib.sha256(f"{base_seed}|rep{replication}".encode()).digest()
    return (
        int.from_bytes(digest[0:8], "little"),
        int.from_bytes(digest[8:16], "little"),
        int.from_bytes(digest[16:24], "little"),
    )


def set_path(raw: dict, dotted: str, value) -> None:
    """Assign a dot-path inside a nested mapping, creating levels as needed."""
    parts = dotted.split(".")
    node = raw
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ValueError(f"override path {dotted!r} crosses a non-mapping node")
    node[parts[-1]] = value


def expand_sweep(raw: dict) -> list[tuple[str, dict]]:
    """Expand the sweep block into (cell label, resolved raw config) pairs."""
    sweep = raw.get("sweep") or {}
    if not isinstance(sweep, dict):
        raise ValueError("sweep: must be a mapping of dot-paths to value lists")
    base = {k: v for k, v in raw.items() if k != "sweep"}
    if not sweep:
        return [("base", copy.deepcopy(base))]
    paths = sorted(sweep)
    for path in paths:
        if not isinstance(sweep[path], list) or not sweep[path]:
            raise ValueError(f"sweep.{path}: must be a nonempty list")
    cells = []
    for combo in itertools.product(*(sweep[p] for p in paths)):
        resolved = copy.deepcopy(base)
        labels = []
        for path, value in zip(paths, combo):
            set_path(resolved, path, value)
            labels.append(f"{path.rsplit('.', 1)[-1]}={value}")
        cells.append((",".join(labels), resolved))
    return cells


def _slugify(label: str) -> str:
    out = []
    for ch in label:
        out.append(ch if ch.isalnum() or ch in ".-" else "_")
    return "".join(out) or "base"


def execute_replication(config: ExperimentConfig, replication: int) -> RunResult:
    """Run one seeded replication of the configured protocol."""
    env_seed, topo_seed, run_seed = derive_seeds(config.base_seed, replication)
    envb = config.environment
    env = build_env(
        EnvConfig(
            num_agents=envb.num_agents,
            num_arms=envb.num_arms,
            horizon=envb.horizon,
            reward_kind=envb.reward_kind,
            mean_mode=envb.mean_mode,
            means=envb.means,
        ),
        env_seed,
    )
    alg = config.algorithm
    profile = gap_profile(env)
    single = alg.structure == SINGLE
    params = ScheduleParams(
        num_agents=1 if single else env.num_agents,
        num_arms=env.num_arms,
        horizon=env.horizon,
        epsilon=alg.epsilon if alg.epsilon is not None else 1.0,
        noise_enabled=alg.noise_enabled,
        participation=alg.participation if alg.structure == CENTRALIZED else 1.0,
        fixed_rounds=alg.rounds,
        round_gap=profile.min_gap if alg.rounds is not None else None,
    )
    privacy = PrivacyParams(
        epsilon=alg.epsilon if alg.epsilon is not None else 1.0, enabled=alg.noise_enabled
    )
    costs = (float(config.costs.c1), float(config.costs.c2))
    topo_rng = np.random.default_rng(topo_seed)
    rng = np.random.default_rng(run_seed)
    if alg.structure == CENTRALIZED:
        return run_cdp_mab(env, params, privacy, costs, rng)
    if alg.structure == DECENTRALIZED:
        graph = build_topology(
            config.topology.kind,
            env.num_agents,
            topo_rng,
            degree=config.topology.degree,
            edge_prob=config.topology.edge_prob,
        )
        return run_ddp_mab(env, graph, params, privacy, costs, rng)
    if alg.structure == HYBRID:
        subgraphs = [
            build_topology(c.kind, c.size, topo_rng, degree=c.degree, edge_prob=c.edge_prob)
            if c.size > 1
            else build_topology("complete", 1, topo_rng)
            for c in config.components
        ]
        layout = build_component_layout(subgraphs)
        return run_hdp_mab(
            env, layout, params, privacy, costs, rng,
            weighted_average=alg.weighted_component_average,
        )
    return run_single_agent(env, alg.agent_index, params, privacy, costs, rng)


def _replication_job(args) -> tuple[float, float]:
    config, replication, trace_path, c1, c2 = args
    result = execute_replication(config, replication)
    write_trace_csv(
        trace_path,
        result.sample_times(),
        result.trace,
        result.ledger,
        result.active_sizes(),
    )
    return result.final_regret, total_cost(result.ledger, c1, c2)


def run_experiment(config_path, overrides=(), out_dir=None, jobs: int = 1,
                   validate_only: bool = False) -> int:
    """Load, validate, and execute the experiment; returns the exit code."""
    try:
        raw = yaml.safe_load(Path(config_path).read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        for item in overrides:
            if "=" not in item:
                raise ValueError(f"override {item!r} is not of the form key=value")
            key, _, value = item.partition("=")
            set_path(raw, key.strip(), yaml.safe_load(value))
        cells = expand_sweep(raw)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    parsed_cells: list[tuple[str, ExperimentConfig]] = []
    all_diags: list[str] = []
    for label, cell_raw in cells:
        config, diags = parse_config(cell_raw)
        if diags:
            all_diags.extend(f"[{label}] {d}" for d in diags)
        else:
            parsed_cells.append((label, config))
    if all_diags:
        for diag in all_diags:
            print(f"config error: {diag}", file=sys.stderr)
        return 1
    if validate_only:
        print(f"config ok: {len(parsed_cells)} cell(s), no issues found")
        return 0

    failures = 0
    for label, config in parsed_cells:
        out_root = Path(out_dir) if out_dir is not None else Path(config.output_dir)
        cell_dir = out_root / _slugify(label)
        cell_dir.mkdir(parents=True, exist_ok=True)
        c1, c2 = float(config.costs.c1), float(config.costs.c2)
        job_args = [
            (config, rep, cell_dir / f"rep{rep:03d}.csv", c1, c2)
            for rep in range(config.replications)
        ]
        try:
            if jobs > 1:
                with ProcessPoolExecutor(max_workers=jobs) as pool:
                    outcomes = list(pool.map(_replication_job, job_args))
            else:
                outcomes = [_replication_job(a) for a in job_args]
        except (ValueError, RuntimeError, IndexError) as exc:
            print(f"cell {label}: failed: {exc}", file=sys.stderr)
            failures += 1
            continue
        summary = summarize([o[0] for o in outcomes], [o[1] for o in outcomes])
        write_summary_csv(cell_dir / "summary.csv", summary)
        print(
            f"cell {label}: replications={summary.replications} "
            f"regret_mean={summary.regret_mean:.2f} cost_mean={summary.cost_mean:.2f}"
        )
    return 2 if failures else 0


def validate_config(config_path) -> list[str]:
    """Structural validation without running; returns diagnostics (empty = ok)."""
    try:
        raw = yaml.safe_load(Path(config_path).read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as exc:
        return [str(exc)]
    try:
        cells = expand_sweep(raw)
    except ValueError as exc:
        return [str(exc)]
    diags: list[str] = []
    for label, cell_raw in cells:
        _, cell_diags = parse_config(cell_raw)
        diags.extend(f"[{label}] {d}" for d in cell_diags)
    return diags


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fedbandit",
        description="Run seeded federated bandit experiments from a YAML config.",
    )
    parser.add_argument("config", help="path to the experiment config document")
    parser.add_argument(
        "--override",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config entry by dot-path (repeatable)",
    )
    parser.add_argument("--out", default=None, help="output directory (default: config output_dir)")
    parser.add_argument("--jobs", type=int, default=1, help="parallel replications per cell")
    parser.add_argument("--validate", action="store_true", help="validate the config and exit")
    args = parser.parse_args(argv)
    if args.jobs < 1:
        print("config error: --jobs must be >= 1", file=sys.stderr)
        return 1
    return run_experiment(
        args.config,
        overrides=args.override,
        out_dir=args.out,
        jobs=args.jobs,
        validate_only=args.validate,
    )


if __name__ == "__main__":
    sys.exit(main())
