import io
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gossip_privacy.chain import spread_probabilities
from gossip_privacy.graphs import GraphSpec, build_graph, complete_graph, ring_graph
from gossip_privacy.sim import (SimConfig, StopCondition, check_trial_consistency, dump_trials,
                                estimate_first_observation_distribution, estimate_spread_probability,
                                estimate_spread_row, measure_spreading_time, run_trial, run_trials)
from conftest import connected_graphs
import oracles as O


def within(est, value, k=4.0):
    return abs(est.value - value) <= k * max(est.stderr, 1e-12)


def test_config_validation():
    g = ring_graph(4)
    bad = [dict(protocol="pull"), dict(timing="x"), dict(alpha=1.5), dict(failure=1.0), dict(monitor_delay=-1),
           dict(source=4), dict(num_trials=0), dict(stop=StopCondition("fraction", fraction=0.0)),
           dict(stop=StopCondition.target_absorbed(9)), dict(alpha=0.0, stop=StopCondition.first_observation())]
    for kw in bad:
        with pytest.raises(ValueError):
            SimConfig(**kw).validate(g)


def test_stop_parse():
    assert StopCondition.parse("all") == StopCondition.all_informed()
    assert StopCondition.parse("fraction:0.9") == StopCondition.informed_fraction(0.9)
    assert StopCondition.parse("first") == StopCondition.first_observation()
    assert StopCondition.parse("target:3") == StopCondition.target_absorbed(3)
    with pytest.raises(ValueError):
        StopCondition.parse("forever")
    assert StopCondition.informed_fraction(0.9).needed(2000) == 1800


@pytest.mark.parametrize("timing", ["sync", "async"])
def test_k2_forced_move(timing):
    cfg = SimConfig(protocol="private", timing=timing, alpha=0.0, num_trials=20)
    for o in run_trials(complete_graph(2), cfg):
        assert o.steps == 1 and o.informed_sizes == [1, 2] and o.reason == "informed"
    res = measure_spreading_time(complete_graph(2), SimConfig(protocol="private", timing="sync", num_trials=50))
    assert res[0.0]["time"].value == 1.0 and res[0.0]["time"].stderr == 0.0


def test_alpha_one_sync_first_event_is_source():
    g = build_graph(GraphSpec("erdos_renyi", 15, p=0.3, seed=1))
    for protocol in ("private", "standard"):
        cfg = SimConfig(protocol=protocol, timing="sync", alpha=1.0, source=5, num_trials=50, master_seed=2)
        for o in run_trials(g, cfg):
            assert o.observations.first == (5, 0)


def test_alpha_one_async_first_actor_is_source():
    cfg = SimConfig(protocol="private", timing="async", alpha=1.0, source=2,
                    stop=StopCondition.first_observation(), num_trials=500)
    d = estimate_first_observation_distribution(ring_graph(6), cfg)
    assert d["first=2"].value == 1.0


def test_standard_sync_determinism_k4():
    cfg = SimConfig(protocol="standard", timing="sync", alpha=0.5, master_seed=8, num_trials=5)
    a, b = run_trials(complete_graph(4), cfg), run_trials(complete_graph(4), cfg)
    for x, y in zip(a, b):
        assert x.informed_sizes == y.informed_sizes and x.observations == y.observations
        assert x.informed_sizes[-1] == 4
        assert all(p <= q for p, q in zip(x.informed_sizes, x.informed_sizes[1:]))


def test_standard_sync_can_jump():
    cfg = SimConfig(protocol="standard", timing="sync", alpha=0.0, master_seed=1, num_trials=200)
    jumps = [max(np.diff(o.informed_sizes)) for o in run_trials(complete_graph(30), cfg)]
    assert max(jumps) > 1


def test_workers_do_not_change_results():
    cfg = SimConfig(protocol="standard", timing="async", alpha=0.4, failure=0.2, master_seed=3, num_trials=12,
                    wall_clock=True)
    g = ring_graph(7)
    a = run_trials(g, cfg, workers=1)
    b = run_trials(g, cfg, workers=3)
    assert [o.to_json() for o in a] == [o.to_json() for o in b]
    r1 = estimate_spread_row(g, 0.3, 2, 25_000, 5, block_size=4000, workers=1)
    r2 = estimate_spread_row(g, 0.3, 2, 25_000, 5, block_size=4000, workers=2)
    assert r1.rows() == r2.rows()


def test_trial_stream_is_per_index():
    cfg = SimConfig(protocol="private", alpha=0.3, master_seed=4, num_trials=10)
    g = ring_graph(5)
    assert run_trial(g, cfg, 7).to_json() == run_trials(g, cfg)[7].to_json()
    assert run_trials(g, cfg, trials=[7])[0].to_json() == run_trial(g, cfg, 7).to_json()


@settings(max_examples=25)
@given(connected_graphs(max_n=8), st.sampled_from(["private", "standard"]), st.sampled_from(["sync", "async"]),
       st.floats(0.0, 1.0), st.floats(0.0, 0.8), st.integers(0, 4), st.integers(0, 10_000))
def test_consistency_with_actions(g, protocol, timing, alpha, f, t, seed):
    cfg = SimConfig(protocol=protocol, timing=timing, alpha=alpha, failure=f, monitor_delay=t,
                    master_seed=seed, num_trials=1, record_actions=True)
    o = run_trial(g, cfg, 0)
    check_trial_consistency(o, cfg)
    assert o.informed_sizes[-1] == g.n and o.reason == "informed"
    if protocol == "private":
        assert o.steps == len(o.actions)


def test_delay_drops_early_observations():
    cfg = SimConfig(protocol="private", timing="sync", alpha=1.0, monitor_delay=3, master_seed=1, num_trials=30)
    for o in run_trials(ring_graph(5), cfg):
        assert all(slot >= 3 for _, slot in o.observations.events)


def test_first_observation_stop_continues_past_coverage():
    cfg = SimConfig(protocol="private", alpha=0.01, stop=StopCondition.first_observation(), master_seed=1,
                    num_trials=20)
    outs = run_trials(complete_graph(3), cfg)
    assert all(o.reason == "observed" and len(o.observations) == 1 for o in outs)
    assert max(o.steps for o in outs) > 10


def test_target_absorbed_stop():
    cfg = SimConfig(protocol="private", alpha=0.2, stop=StopCondition.target_absorbed(2), master_seed=1,
                    num_trials=200)
    for o in run_trials(ring_graph(4), cfg):
        assert o.reason in ("observed", "target_absorbed")


def test_spread_estimator_examples():
    est = estimate_spread_probability(ring_graph(4), 0.5, 1, 1, 1000, seed=0)
    assert est["P(1->1)"].value == 1.0
    est = estimate_spread_probability(ring_graph(4), 0.5, 1, 0, 100_000, seed=1)
    assert within(est["P(1->0)"], 2 / 7)
    assert est["P(1->0)"].stderr == pytest.approx(0.0014, abs=1e-4)
    est = estimate_spread_probability(complete_graph(2), 0.5, 0, 1, 100_000, seed=2)
    assert within(est["P(0->1)"], 0.5)
    est = estimate_spread_probability(ring_graph(4), 1.0, 0, 2, 5000, seed=2)
    assert est["P(0->2)"].value == 0.0


def test_spread_row_matches_closed_form():
    g = build_graph(GraphSpec("erdos_renyi", 10, p=0.4, seed=3))
    P = spread_probabilities(g, 0.4).p
    row = estimate_spread_row(g, 0.4, 3, 50_000, seed=9)
    passed = [within(row[f"P(3->{i})"], P[3, i]) for i in range(g.n) if i != 3]
    assert sum(passed) >= len(passed) - 1


def test_first_observation_source_frequency_sync():
    g = ring_graph(6)
    for protocol in ("private", "standard"):
        cfg = SimConfig(protocol=protocol, timing="sync", alpha=0.3, source=1, num_trials=20_000, master_seed=5,
                        stop=StopCondition.first_observation())
        d = estimate_first_observation_distribution(g, cfg)
        assert within(d["first@start"], 0.3)


def test_first_observation_identity_ring4():
    # p^(1)(first seen at 0) = P(1->0) p^(0)(first seen at 0)
    g = ring_graph(4)
    base = dict(protocol="private", timing="async", alpha=0.5, stop=StopCondition.first_observation(),
                num_trials=100_000)
    d1 = estimate_first_observation_distribution(g, SimConfig(source=1, master_seed=1, **base))
    d0 = estimate_first_observation_distribution(g, SimConfig(source=0, master_seed=2, **base))
    a, b = d1["first=0"], d0["first=0"]
    r = a.value / b.value
    se = r * np.hypot(a.stderr / a.value, b.stderr / b.value)
    assert abs(r - 2 / 7) <= 4 * se


def test_vectorised_and_per_trial_paths_agree():
    g = ring_graph(5)
    cfg = SimConfig(protocol="private", timing="async", alpha=0.4, failure=0.3, monitor_delay=2, source=0,
                    stop=StopCondition.all_informed(), num_trials=20_000, master_seed=3)
    fast = estimate_first_observation_distribution(g, cfg)
    slow_cfg = SimConfig(**{**cfg.__dict__, "num_trials": 20_000, "master_seed": 4})
    counts = np.zeros(g.n)
    none = 0
    for o in run_trials(g, slow_cfg):
        if o.observations.first is None:
            none += 1
        else:
            counts[o.observations.first[0]] += 1
    for k in range(g.n):
        e = fast[f"first={k}"]
        se = np.sqrt(2) * max(e.stderr, 1e-3)
        assert abs(e.value - counts[k] / 20_000) <= 4 * se
    assert abs(fast["first=none"].value - none / 20_000) <= 4 * np.sqrt(2) * max(fast["first=none"].stderr, 1e-3)


def test_k4_cover_time():
    res = measure_spreading_time(complete_graph(4), SimConfig(protocol="private", timing="sync", num_trials=10_000,
                                                              master_seed=11))
    assert within(res[0.0]["time"], 3 * O.harmonic(3))


def test_failure_scaling_small():
    res = measure_spreading_time(complete_graph(10), SimConfig(protocol="private", timing="async", num_trials=4000,
                                                               master_seed=2), failures=(0.0, 0.5))
    assert abs(res[0.5]["ratio"].value - 2.0) <= 4 * res[0.5]["ratio"].stderr


def test_spreading_time_needs_coverage_stop():
    with pytest.raises(ValueError):
        measure_spreading_time(ring_graph(4), SimConfig(stop=StopCondition.first_observation()))


def test_dump_jsonl():
    buf = io.StringIO()
    dump_trials(run_trials(ring_graph(4), SimConfig(alpha=0.5, num_trials=3, master_seed=1)), buf)
    lines = buf.getvalue().splitlines()
    assert len(lines) == 3
    rec = json.loads(lines[1])
    assert rec["trial_index"] == 1 and rec["observations"]["timing"] == "async"


def test_stats_rows():
    st_ = estimate_spread_row(ring_graph(4), 0.5, 0, 2000, seed=7)
    rows = st_.rows()
    assert rows[0][0] == "P(0->0)" and all(r[3] == 2000 and r[4] == 7 for r in rows)
