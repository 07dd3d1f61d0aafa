"""Aggregation of per-flow records into the reported quantities: throughput
percentiles, sum-log utility, CDF samples, and resource utilization."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "FlowRecord",
    "MetricsReport",
    "ComparisonTable",
    "percentile",
    "build_report",
    "compare",
    "FLOWS_HEADER",
    "SUMMARY_HEADER",
    "CDF_HEADER",
    "write_csv",
]

FLOWS_HEADER = [
    "flow_id", "ue_id", "policy", "seed", "arrival_s", "completion_s",
    "size_bits", "throughput_bps",
]
SUMMARY_HEADER = [
    "policy", "seed", "ue_per_sector", "backhaul_delay_ms", "edge_bps",
    "median_bps", "sum_log", "utilization",
]
CDF_HEADER = ["policy", "throughput_bps", "cdf"]


@dataclass(slots=True)
class FlowRecord:
    """One completed file transfer."""

    flow_id: int
    ue_id: int
    arrival_s: float
    size_bits: float
    macro_bits: float
    smallcell_bits: float
    smallcell_available_s: float | None
    completion_s: float

    @property
    def throughput_bps(self) -> float:
        return self.size_bits / (self.completion_s - self.arrival_s)


@dataclass
class MetricsReport:
    """Throughput statistics over the measured flows of one run."""

    flows: list[FlowRecord]
    edge_rate_bps: float
    median_rate_bps: float
    sum_log_utility: float
    macro_utilization: float
    wlan_utilization: float
    per_ue_mean_bps: dict[int, float] = field(default_factory=dict)

    @property
    def utilization(self) -> float:
        return self.macro_utilization

    def per_flow_throughputs(self) -> list[float]:
        return [f.throughput_bps for f in self.flows]


def percentile(samples: list[float], q: float) -> float:
    """Linear-interpolation percentile over the sorted samples."""
    if not samples:
        raise ValueError("percentile: empty sample list")
    if not 0.0 <= q <= 100.0:
        raise ValueError("percentile: q must be in [0, 100]")
    return float(np.percentile(np.asarray(samples, dtype=np.float64), q,
                               method="linear"))


def build_report(flows: list[FlowRecord], macro_utilization: float,
                 wlan_utilization: float) -> MetricsReport:
    """Aggregates completed measured flows; flows must be non-empty."""
    if not flows:
        raise ValueError("build_report: no measured flows")
    tputs = [f.throughput_bps for f in flows]
    per_ue: dict[int, list[float]] = {}
    for f in flows:
        per_ue.setdefault(f.ue_id, []).append(f.throughput_bps)
    per_ue_mean = {ue: sum(v) / len(v) for ue, v in sorted(per_ue.items())}
    sum_log = sum(math.log(v) for v in per_ue_mean.values())
    return MetricsReport(
        flows=list(flows),
        edge_rate_bps=percentile(tputs, 5.0),
        median_rate_bps=percentile(tputs, 50.0),
        sum_log_utility=sum_log,
        macro_utilization=macro_utilization,
        wlan_utilization=wlan_utilization,
        per_ue_mean_bps=per_ue_mean,
    )


def cdf_points(samples: list[float]) -> list[tuple[float, float]]:
    """Empirical CDF: one (value, cdf) step per sample, ending at 1.0."""
    srt = sorted(samples)
    n = len(srt)
    return [(v, (i + 1) / n) for i, v in enumerate(srt)]


@dataclass
class ComparisonTable:
    """Edge/median gains of the splitting policy over each baseline."""

    edge_gain: dict[str, float]
    median_gain: dict[str, float]

    def rows(self) -> list[dict[str, float | str]]:
        out = []
        for pol in sorted(self.edge_gain):
            out.append({
                "baseline": pol,
                "edge_gain_pct": 100.0 * self.edge_gain[pol],
                "median_gain_pct": 100.0 * self.median_gain[pol],
            })
        return out


def compare(reports: dict[str, MetricsReport], reference: str = "Proposed") -> ComparisonTable:
    """Relative gains of `reference` over every other policy in `reports`."""
    if reference not in reports:
        raise ValueError(f"compare: missing reference policy {reference!r}")
    ref = reports[reference]
    edge, median = {}, {}
    for name, rep in reports.items():
        if name == reference:
            continue
        edge[name] = ref.edge_rate_bps / rep.edge_rate_bps - 1.0
        median[name] = ref.median_rate_bps / rep.median_rate_bps - 1.0
    return ComparisonTable(edge_gain=edge, median_gain=median)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(float(v))  # float() strips numpy scalar wrappers
    return str(v)


def write_csv(path: str, header: list[str], rows: list[dict]) -> None:
    """Writes rows in header order with round-trip float formatting, so
    identical inputs produce byte-identical files."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[col]) for col in header) + "\n")
