import math

import pytest

from hetsplit.metrics import (
    CDF_HEADER,
    FLOWS_HEADER,
    SUMMARY_HEADER,
    FlowRecord,
    build_report,
    cdf_points,
    compare,
    percentile,
    write_csv,
)


def _record(i, ue, tput, size=4e6):
    # arrival i, completion such that throughput equals tput
    return FlowRecord(
        flow_id=i, ue_id=ue, arrival_s=float(i), size_bits=size,
        macro_bits=size, smallcell_bits=0.0, smallcell_available_s=None,
        completion_s=float(i) + size / tput,
    )


# --- percentile ---------------------------------------------------------------

def test_percentile_singleton():
    assert percentile([10.0], 5.0) == 10.0
    assert percentile([10.0], 95.0) == 10.0


def test_percentile_linear_interpolation():
    samples = [float(v) for v in range(1, 101)]
    assert percentile(samples, 50.0) == pytest.approx(50.5)


def test_percentile_extremes_are_min_max():
    samples = [3.0, 1.0, 7.0, 5.0]
    assert percentile(samples, 0.0) == 1.0
    assert percentile(samples, 100.0) == 7.0


def test_percentile_rejects_bad_inputs():
    with pytest.raises(ValueError):
        percentile([], 50.0)
    with pytest.raises(ValueError):
        percentile([1.0], 101.0)


# --- report -------------------------------------------------------------------

def test_report_edge_not_above_median():
    flows = [_record(i, i % 5, 1e6 * (1 + i)) for i in range(40)]
    rep = build_report(flows, 0.5, 0.1)
    assert rep.edge_rate_bps <= rep.median_rate_bps
    assert rep.utilization == 0.5


def test_report_sum_log_over_per_ue_means():
    flows = [_record(0, 0, 2e6), _record(1, 0, 4e6), _record(2, 1, 8e6)]
    rep = build_report(flows, 0.0, 0.0)
    assert rep.per_ue_mean_bps[0] == pytest.approx(3e6)
    assert rep.per_ue_mean_bps[1] == pytest.approx(8e6)
    assert rep.sum_log_utility == pytest.approx(math.log(3e6) + math.log(8e6))


def test_report_rejects_empty():
    with pytest.raises(ValueError):
        build_report([], 0.0, 0.0)


def test_throughputs_positive():
    flows = [_record(i, i, 1e5 * (i + 1)) for i in range(10)]
    rep = build_report(flows, 0.0, 0.0)
    assert all(t > 0 for t in rep.per_flow_throughputs())


# --- cdf ----------------------------------------------------------------------

def test_cdf_monotone_and_ends_at_one():
    pts = cdf_points([5.0, 1.0, 3.0, 2.0])
    values = [v for v, _ in pts]
    cdf = [c for _, c in pts]
    assert values == sorted(values)
    assert all(b >= a for a, b in zip(cdf, cdf[1:]))
    assert cdf[-1] == 1.0
    assert len(pts) == 4


# --- compare ------------------------------------------------------------------

def _simple_report(edge, median):
    flows = [_record(0, 0, median)]
    rep = build_report(flows, 0.0, 0.0)
    rep.edge_rate_bps = edge
    rep.median_rate_bps = median
    return rep


def test_compare_identical_reports_zero_gain():
    rep = _simple_report(1e6, 2e6)
    table = compare({"Proposed": rep, "Rel12": rep, "DE": rep})
    assert table.edge_gain["Rel12"] == 0.0
    assert table.median_gain["DE"] == 0.0
    for row in table.rows():
        assert row["edge_gain_pct"] == 0.0


def test_compare_positive_gain():
    table = compare({
        "Proposed": _simple_report(2e6, 4e6),
        "Rel12": _simple_report(1e6, 2e6),
    })
    assert table.edge_gain["Rel12"] == pytest.approx(1.0)
    assert table.median_gain["Rel12"] == pytest.approx(1.0)


def test_compare_requires_reference():
    with pytest.raises(ValueError):
        compare({"Rel12": _simple_report(1e6, 2e6)})


# --- csv ----------------------------------------------------------------------

def test_csv_headers_frozen():
    assert FLOWS_HEADER == [
        "flow_id", "ue_id", "policy", "seed", "arrival_s", "completion_s",
        "size_bits", "throughput_bps",
    ]
    assert SUMMARY_HEADER == [
        "policy", "seed", "ue_per_sector", "backhaul_delay_ms", "edge_bps",
        "median_bps", "sum_log", "utilization",
    ]
    assert CDF_HEADER == ["policy", "throughput_bps", "cdf"]


def test_csv_write_roundtrip_and_determinism(tmp_path):
    rows = [
        {"policy": "WP", "throughput_bps": 1.25e6, "cdf": 0.5},
        {"policy": "WP", "throughput_bps": 2.5e6, "cdf": 1.0},
    ]
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_csv(str(p1), CDF_HEADER, rows)
    write_csv(str(p2), CDF_HEADER, rows)
    assert p1.read_bytes() == p2.read_bytes()
    lines = p1.read_text().strip().split("\n")
    assert lines[0] == "policy,throughput_bps,cdf"
    assert lines[1] == "WP,1250000.0,0.5"
