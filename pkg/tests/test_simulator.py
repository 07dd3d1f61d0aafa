import math

import numpy as np
import pytest

from hetsplit.allocator import UeLinkState, effective_rate
from hetsplit.baselines import Policy
from hetsplit.config import ScenarioConfig
from hetsplit.radio import Sector, SmallCell, Topology, UeNode
from hetsplit.simulator import SimulationError, arrivals, run, sector_reallocate


def make_topology(ue_specs: list[dict], n_aps: int = 1) -> Topology:
    """One site, three sectors, hand-set link qualities."""
    sectors = [Sector(index=j, site=0, boresight_deg=120.0 * j) for j in range(3)]
    aps = [
        SmallCell(index=i, sector=0, position=(50.0 + 10.0 * i, 0.0),
                  channel=i % 3, tx_power_dbm=20.0)
        for i in range(n_aps)
    ]
    ues = []
    for i, spec in enumerate(ue_specs):
        ues.append(UeNode(
            ue_id=i,
            position=(float(i), 0.0),
            drop_sector=spec.get("sector", 0),
            serving_sector=spec.get("sector", 0),
            covering_ap=spec.get("ap"),
            macro_sinr_db=spec.get("sinr", 10.0),
            macro_peak_bps=spec["p"],
            best_ap_snr_db=spec.get("ap_snr", 20.0 if spec.get("ap") is not None else None),
            smallcell_peak_bps=spec.get("r", 0.0),
        ))
    return Topology(
        isd_m=500.0,
        site_positions=np.zeros((1, 2)),
        sectors=sectors,
        small_cells=aps,
        ues=ues,
        wrap_offsets_m=np.zeros((1, 2)),
    )


def single_run_cfg(policy="Proposed", delay_ms=0.0, warmup=0.0, measured=30.0,
                   mean_ia=1.0) -> ScenarioConfig:
    cfg = ScenarioConfig()
    cfg.topology.sites = 1
    cfg.traffic.ue_per_sector = [1]
    cfg.traffic.mean_interarrival_s = mean_ia
    cfg.durations.warmup_s = warmup
    cfg.durations.measured_s = measured
    return cfg.for_run(policy, 1, delay_ms)


# --- arrivals ---------------------------------------------------------------

def test_arrivals_deterministic():
    assert arrivals(3, 99, 50.0) == arrivals(3, 99, 50.0)


def test_arrivals_substreams_differ():
    assert arrivals(3, 99, 50.0) != arrivals(4, 99, 50.0)


def test_arrivals_mean_within_one_percent():
    times = arrivals(0, 12345, 100_500.0, 1.0)
    gaps = np.diff(np.array(times))
    assert len(times) > 1e5
    assert abs(gaps.mean() - 1.0) < 0.01


def test_arrivals_rejects_bad_inputs():
    with pytest.raises(ValueError):
        arrivals(0, 1, 0.0)
    with pytest.raises(ValueError):
        arrivals(0, 1, 10.0, 0.0)


# --- sector snapshot helper ---------------------------------------------------

def test_sector_reallocate_empty():
    assert sector_reallocate([], Policy.PROPOSED) == {}


def test_sector_reallocate_single_ue_gets_everything():
    states = [UeLinkState(0, 2e7, 0.0, 0.0, 4e6)]
    for policy in Policy:
        assert sector_reallocate(states, policy) == {0: pytest.approx(2e7)}


def test_sector_reallocate_identical_ues_split_evenly():
    states = [UeLinkState(i, 2e7, 1e6, 0.01, 4e6) for i in range(4)]
    for policy in (Policy.PROPOSED, Policy.DE, Policy.WP):
        rates = sector_reallocate(states, policy)
        for ue in range(4):
            assert rates[ue] == pytest.approx(5e6, rel=1e-9)


# --- single-UE closed forms ---------------------------------------------------

def _flow_tuples(report):
    return [(f.flow_id, f.arrival_s, f.completion_s) for f in report.flows]


def test_macro_only_single_ue_matches_queueing_recursion():
    p = 4e6
    cfg = single_run_cfg()
    top = make_topology([{"p": p}], n_aps=0)
    rep = run(cfg, 7, topology=top)
    service = cfg.traffic.file_size_bits / p
    c_prev = -math.inf
    for f in sorted(rep.flows, key=lambda f: f.arrival_s):
        expected = max(f.arrival_s, c_prev) + service
        assert f.completion_s == pytest.approx(expected, rel=1e-9)
        assert f.macro_bits == pytest.approx(f.size_bits, rel=1e-12)
        assert f.smallcell_bits == 0.0
        c_prev = expected


def test_smallcell_only_single_ue_matches_closed_form():
    r, l = 8e6, 0.025
    cfg = single_run_cfg(delay_ms=l * 1000.0)
    top = make_topology([{"p": 0.0, "r": r, "ap": 0}])
    rep = run(cfg, 21, topology=top)
    f_bits = cfg.traffic.file_size_bits
    c_prev = -math.inf
    isolated_checked = 0
    for f in sorted(rep.flows, key=lambda f: f.arrival_s):
        expected = max(max(f.arrival_s, c_prev), f.arrival_s + l) + f_bits / r
        assert f.completion_s == pytest.approx(expected, rel=1e-9)
        assert f.macro_bits == 0.0
        if f.arrival_s > c_prev:  # isolated: engine must reproduce the
            # delay-discounted rate exactly
            assert f.throughput_bps == pytest.approx(
                effective_rate(r, l, f_bits), rel=1e-9
            )
            isolated_checked += 1
        c_prev = expected
    assert isolated_checked > 0


def test_both_legs_zero_delay_throughput_is_sum_of_rates():
    p, r = 6e6, 10e6
    cfg = single_run_cfg(mean_ia=5.0)  # sparse, so most flows are isolated
    top = make_topology([{"p": p, "r": r, "ap": 0}])
    rep = run(cfg, 33, topology=top)
    c_prev = -math.inf
    isolated = 0
    for f in sorted(rep.flows, key=lambda f: f.arrival_s):
        if f.arrival_s > c_prev:
            assert f.throughput_bps == pytest.approx(p + r, rel=1e-9)
            isolated += 1
        c_prev = f.completion_s
    assert isolated >= 3


def test_physical_rate_bound_and_bit_conservation():
    p, r = 6e6, 10e6
    cfg = single_run_cfg(policy="DE", delay_ms=20.0)
    top = make_topology([{"p": p, "r": r, "ap": 0}])
    rep = run(cfg, 5, topology=top)
    for f in rep.flows:
        assert f.completion_s >= f.arrival_s + f.size_bits / (p + r) - 1e-9
        assert f.macro_bits + f.smallcell_bits == pytest.approx(f.size_bits, rel=1e-9)
        if f.smallcell_bits > 0:
            assert f.smallcell_available_s == pytest.approx(f.arrival_s + 0.02, rel=1e-12)
            assert f.completion_s >= f.smallcell_available_s


# --- engine behaviour ----------------------------------------------------------

def _multi_ue_cfg(policy="Proposed", delay_ms=10.0):
    cfg = ScenarioConfig()
    cfg.topology.sites = 1
    cfg.traffic.ue_per_sector = [8]
    cfg.durations.warmup_s = 2.0
    cfg.durations.measured_s = 20.0
    return cfg.for_run(policy, 8, delay_ms)


def test_run_deterministic_across_calls():
    cfg = _multi_ue_cfg()
    a = run(cfg, 11)
    b = run(cfg, 11)
    assert _flow_tuples(a) == _flow_tuples(b)
    assert a.edge_rate_bps == b.edge_rate_bps
    assert a.utilization == b.utilization


def test_snapshot_allocations_dominate_equal_share():
    from hetsplit.allocator import sum_log_objective

    cfg = _multi_ue_cfg()
    worst = math.inf

    def audit(now, fractions, states):
        nonlocal worst
        opt = sum_log_objective(states, fractions)
        share = 1.0 / len(states)
        eq = sum_log_objective(states, {s.ue_id: share for s in states})
        worst = min(worst, opt - eq)

    run(cfg, 13, on_realloc=audit)
    assert worst >= -1e-9


def test_trace_file_format(tmp_path):
    cfg = single_run_cfg(delay_ms=10.0, measured=10.0)
    top = make_topology([{"p": 5e6, "r": 8e6, "ap": 0}])
    trace = tmp_path / "events.csv"
    run(cfg, 3, topology=top, trace_path=str(trace))
    lines = trace.read_text().strip().split("\n")
    assert lines
    kinds = set()
    for ln in lines:
        parts = ln.split(",")
        assert len(parts) == 5
        float(parts[0])
        kinds.add(parts[1])
        int(parts[2])
        int(parts[3])
    assert kinds <= {"Arrival", "LegCompletion", "ReallocationDue"}
    assert "Arrival" in kinds and "LegCompletion" in kinds


def test_event_budget_guard():
    cfg = _multi_ue_cfg()
    cfg.sim.max_events = 50
    with pytest.raises(SimulationError):
        run(cfg, 1)


def test_infeasible_ue_rejected():
    cfg = single_run_cfg()
    top = make_topology([{"p": 0.0, "r": 0.0}], n_aps=0)
    with pytest.raises(SimulationError):
        run(cfg, 1, topology=top)


def test_periodic_reallocation_mode_runs():
    cfg = _multi_ue_cfg()
    cfg.sim.reallocation_period_s = 0.01
    a = run(cfg, 17)
    b = run(cfg, 17)
    assert _flow_tuples(a) == _flow_tuples(b)


def test_feedback_lag_mode_runs_and_differs():
    cfg = _multi_ue_cfg(delay_ms=50.0)
    base = run(cfg, 19)
    cfg_lag = _multi_ue_cfg(delay_ms=50.0)
    cfg_lag.sim.feedback_lag = True
    lagged = run(cfg_lag, 19)
    again = run(cfg_lag, 19)
    assert _flow_tuples(lagged) == _flow_tuples(again)
    # stale reports change decisions somewhere; the effect is reported,
    # not asserted in size
    assert _flow_tuples(lagged) != _flow_tuples(base)


def test_fifo_per_ue_service_order():
    cfg = single_run_cfg(mean_ia=0.3, measured=20.0)
    top = make_topology([{"p": 5e6, "r": 5e6, "ap": 0}])
    rep = run(cfg, 23, topology=top)
    by_arrival = sorted(rep.flows, key=lambda f: f.arrival_s)
    completions = [f.completion_s for f in by_arrival]
    assert completions == sorted(completions)


def test_wp_never_splits_flows():
    cfg = _multi_ue_cfg(policy="WP")
    rep = run(cfg, 29)
    for f in rep.flows:
        assert f.macro_bits == 0.0 or f.smallcell_bits == 0.0


def test_rel12_never_splits_flows():
    cfg = _multi_ue_cfg(policy="Rel12")
    rep = run(cfg, 29)
    for f in rep.flows:
        assert f.macro_bits == 0.0 or f.smallcell_bits == 0.0


def test_macro_utilization_increases_with_load():
    utils = []
    for load in (4, 16):
        cfg = ScenarioConfig()
        cfg.topology.sites = 1
        cfg.traffic.ue_per_sector = [load]
        cfg.durations.warmup_s = 2.0
        cfg.durations.measured_s = 20.0
        rep = run(cfg.for_run("Proposed", load, 10.0), 31)
        assert 0.0 <= rep.utilization <= 1.0
        assert 0.0 <= rep.wlan_utilization <= 1.0
        utils.append(rep.utilization)
    assert utils[1] > utils[0]
