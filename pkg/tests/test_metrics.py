import csv

import numpy as np
import pytest

from fedbandit.metrics import (
    AGENT_AGENT,
    SERVER_AGENT,
    CommLedger,
    RegretTrace,
    replay_counts,
    summarize,
    total_cost,
    write_summary_csv,
    write_trace_csv,
)


def make_trace(gaps=(0.0, 0.4, 0.7), agents=3, horizon=100):
    return RegretTrace(np.array(gaps), agents, horizon)


def test_record_pull_best_arm_is_free():
    trace = make_trace()
    trace.record_pull(0, 0, 1)
    assert trace.total_regret == 0.0
    assert trace.total_pulls == 1


def test_record_pull_adds_gap():
    trace = make_trace()
    trace.record_pull(1, 1, 1)
    assert trace.total_regret == pytest.approx(0.4)
    assert trace.per_agent[1] == pytest.approx(0.4)
    assert trace.per_agent[0] == 0.0


def test_optimal_policy_has_zero_regret():
    trace = make_trace(agents=2, horizon=50)
    for t in range(1, 51):
        trace.record_pull(0, 0, t)
        trace.record_pull(1, 0, t)
    assert trace.total_regret == 0.0
    assert trace.total_pulls == 100


def test_pull_beyond_horizon_rejected():
    trace = make_trace(horizon=10)
    with pytest.raises(ValueError):
        trace.record_pull(0, 1, 11)


def test_uniform_block_and_interpolation():
    trace = make_trace(agents=2)
    trace.record_uniform_block(1, 5)  # both agents pull arm 1 five times
    trace.checkpoint(5)
    assert trace.total_regret == pytest.approx(2 * 5 * 0.4)
    assert trace.total_pulls == 10
    # regret accrues linearly inside the block
    assert trace.value_at(2.5) == pytest.approx(trace.total_regret / 2)


def test_exploit_slots_record_per_agent_arms():
    trace = make_trace(agents=3)
    trace.record_exploit_slots([0, 1, 2], num_slots=4, t_end=4)
    assert trace.total_regret == pytest.approx(4 * (0.0 + 0.4 + 0.7))
    assert trace.per_agent[2] == pytest.approx(4 * 0.7)
    assert trace.total_pulls == 12


def test_trace_monotone_checkpoints():
    trace = make_trace()
    trace.record_uniform_block(2, 3)
    trace.checkpoint(3)
    with pytest.raises(ValueError):
        trace.checkpoint_at(2, 0.0)


def test_ledger_totals_and_replay():
    ledger = CommLedger()
    for agent in range(4):
        ledger.add_server_link(1, 0, agent)
    ledger.add_peer_link(1, 1, 2, 0)
    ledger.add_peer_link(1, 1, 0, 1)
    assert (ledger.server_links, ledger.peer_links) == (4, 2)
    assert replay_counts(ledger) == (4, 2)
    entry = ledger.entries[-1]
    assert entry.kind == AGENT_AGENT and (entry.a, entry.b) == (0, 1)
    assert ledger.entries[0].kind == SERVER_AGENT


def test_total_cost_centralized_counting():
    # full participation, 3 rounds of uploads from 50 agents at c1 = 25
    ledger = CommLedger()
    for r in range(1, 4):
        for agent in range(50):
            ledger.add_server_link(r, 0, agent)
    assert total_cost(ledger, 25.0, 1.0) == 25.0 * 50 * 3


def test_total_cost_complete_graph_slot():
    ledger = CommLedger()
    m = 6
    for i in range(m):
        for j in range(i + 1, m):
            ledger.add_peer_link(1, 1, i, j)
    assert total_cost(ledger, 25.0, 1.0) == m * (m - 1) // 2


def test_total_cost_mixed_kinds():
    ledger = CommLedger()
    for sink in range(5):
        ledger.add_server_link(1, 0, sink)
    ledger.add_peer_link(1, 1, 0, 1)
    assert total_cost(ledger, 50.0, 1.0) == 50.0 * 5 + 1.0


def test_ledger_counts_at_checkpoints():
    ledger = CommLedger()
    ledger.add_server_link(1, 0, 0)
    ledger.checkpoint(10)
    ledger.add_peer_link(2, 1, 0, 1)
    ledger.checkpoint(25)
    assert ledger.counts_at(5) == (0, 0)
    assert ledger.counts_at(10) == (1, 0)
    assert ledger.counts_at(24) == (1, 0)
    assert ledger.counts_at(30) == (1, 1)


def test_summarize_single_and_pair():
    s = summarize([10.0], [5.0])
    assert s.regret_mean == 10.0 and s.regret_std == 0.0
    s2 = summarize([10.0, 20.0], [1.0, 3.0])
    assert s2.regret_mean == 15.0 and s2.cost_mean == 2.0
    with pytest.raises(ValueError):
        summarize([], [])


def test_summarize_std_matches_two_pass():
    rng = np.random.default_rng(0)
    regrets = rng.random(50) * 100
    costs = rng.random(50) * 10
    s = summarize(regrets, costs)
    mean = sum(regrets) / 50
    two_pass = (sum((x - mean) ** 2 for x in regrets) / 50) ** 0.5
    assert s.regret_std == pytest.approx(two_pass, rel=1e-12)


def test_trace_csv_layout(tmp_path):
    trace = make_trace(agents=2, horizon=20)
    trace.record_uniform_block(1, 5)
    trace.checkpoint(5)
    ledger = CommLedger()
    ledger.add_server_link(1, 0, 0)
    ledger.checkpoint(5)
    path = tmp_path / "trace.csv"
    write_trace_csv(path, [0, 5], trace, ledger, [3, 2])
    rows = list(csv.reader(path.read_text(encoding="utf-8").splitlines()))
    assert rows[0] == [
        "t",
        "cumulative_regret",
        "cumulative_cost_c1_units",
        "cumulative_cost_c2_units",
        "active_set_size",
    ]
    assert rows[1] == ["0", "0.0", "0", "0", "3"]
    assert float(rows[2][1]) == pytest.approx(4.0)
    assert rows[2][2] == "1" and rows[2][4] == "2"


def test_summary_csv_layout(tmp_path):
    s = summarize([10.0, 20.0], [2.0, 4.0])
    path = tmp_path / "summary.csv"
    write_summary_csv(path, s)
    rows = list(csv.reader(path.read_text(encoding="utf-8").splitlines()))
    assert rows[0][0] == "replications"
    assert rows[1][0] == "2"
    assert float(rows[1][1]) == 15.0
