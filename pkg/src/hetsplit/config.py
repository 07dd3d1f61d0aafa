"""Scenario configuration: nested YAML blocks with embedded defaults.

An empty config file runs the default scenario (7 wraparound sites, 20 UEs
per sector, the full backhaul-delay sweep, all four policies). A non-empty
file must carry a `policy` block; every other block is optional and missing
fields fall back to the defaults below.
"""

from __future__ import annotations

import copy
import hashlib
import math
from dataclasses import dataclass, field, fields
from typing import Any

import yaml

from .baselines import Policy

__all__ = [
    "TopologyBlock",
    "RadioBlock",
    "TrafficBlock",
    "PolicyBlock",
    "DurationsBlock",
    "SimBlock",
    "ScenarioConfig",
    "ConfigError",
    "load_config",
    "validate_config_text",
    "derive_run_seed",
]


class ConfigError(Exception):
    """Raised when a config file cannot be parsed or fails validation."""

    def __init__(self, diagnostics: list[str]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(diagnostics))


@dataclass
class TopologyBlock:
    sites: int = 7                      # 1 or 7 (wraparound lattices)
    sectors_per_site: int = 3
    isd_m: float = 500.0
    small_cells_per_sector: int = 5
    hotspot_fraction: float = 2.0 / 3.0
    hotspot_radius_m: float = 40.0
    redrop_uncovered: bool = True       # resample UEs dead on both RATs


@dataclass
class RadioBlock:
    macro_bandwidth_hz: float = 20e6
    macro_tx_power_dbm: float = 46.0
    macro_antenna_gain_dbi: float = 14.0
    antenna_beamwidth_deg: float = 70.0
    antenna_front_to_back_db: float = 20.0
    macro_pathloss_const_db: float = 128.1
    macro_pathloss_slope_db: float = 37.6
    macro_shadowing_std_db: float = 8.0
    ue_noise_figure_db: float = 9.0
    sinr_floor_db: float = -6.5
    macro_link_efficiency: float = 0.75
    macro_spectral_cap_bps_hz: float = 4.8
    smallcell_bandwidth_hz: float = 20e6
    smallcell_tx_power_dbm: float = 20.0
    smallcell_pathloss_const_db: float = 140.7
    smallcell_pathloss_slope_db: float = 36.7
    smallcell_shadowing_std_db: float = 10.0
    smallcell_noise_figure_db: float = 7.0
    smallcell_link_efficiency: float = 0.75
    smallcell_spectral_cap_bps_hz: float = 6.0
    smallcell_mac_efficiency: float = 0.6
    coverage_snr_threshold_db: float = 2.0
    wlan_interference: bool = False
    min_link_distance_m: float = 3.0


@dataclass
class TrafficBlock:
    ue_per_sector: list[int] = field(default_factory=lambda: [20])
    mean_interarrival_s: float = 1.0
    file_size_bits: float = 4e6         # 0.5 MB per file


@dataclass
class PolicyBlock:
    policies: list[str] = field(
        default_factory=lambda: ["Proposed", "WP", "Rel12", "DE"]
    )
    wp_snr_threshold_db: float = 2.0
    rel12_sinr_threshold_db: float = 5.0


@dataclass
class DurationsBlock:
    warmup_s: float = 100.0
    measured_s: float = 400.0


@dataclass
class SimBlock:
    reallocation_period_s: float = 0.0  # 0 disables the periodic timer
    feedback_lag: bool = False          # small-cell rate reports go stale by l
    max_events: int = 50_000_000


@dataclass
class ScenarioConfig:
    topology: TopologyBlock = field(default_factory=TopologyBlock)
    radio: RadioBlock = field(default_factory=RadioBlock)
    traffic: TrafficBlock = field(default_factory=TrafficBlock)
    policy: PolicyBlock = field(default_factory=PolicyBlock)
    durations: DurationsBlock = field(default_factory=DurationsBlock)
    sim: SimBlock = field(default_factory=SimBlock)
    backhaul_delay_ms: list[float] = field(default_factory=lambda: [0.0, 10.0, 20.0, 50.0])
    seeds: list[int] = field(default_factory=lambda: [1, 2, 3])

    def for_run(self, policy: str, ue_per_sector: int, delay_ms: float) -> "ScenarioConfig":
        """A copy narrowed to one (policy, load, delay) point."""
        run = copy.deepcopy(self)
        run.policy.policies = [policy]
        run.traffic.ue_per_sector = [ue_per_sector]
        run.backhaul_delay_ms = [delay_ms]
        return run

    def is_single_run(self) -> bool:
        return (
            len(self.policy.policies) == 1
            and len(self.traffic.ue_per_sector) == 1
            and len(self.backhaul_delay_ms) == 1
        )

    def validate(self) -> list[str]:
        return _validate(self)


_BLOCK_TYPES = {
    "topology": TopologyBlock,
    "radio": RadioBlock,
    "traffic": TrafficBlock,
    "policy": PolicyBlock,
    "durations": DurationsBlock,
    "sim": SimBlock,
}


def _coerce(block_name: str, cls, raw: dict, errors: list[str]):
    blk = cls()
    known = {f.name for f in fields(cls)}
    for key, value in raw.items():
        if key not in known:
            errors.append(f"{block_name}.{key}: unknown field")
            continue
        setattr(blk, key, value)
    return blk


def parse_config(doc: Any) -> tuple[ScenarioConfig, list[str]]:
    """Builds a ScenarioConfig from a parsed YAML document, collecting all
    structural errors rather than stopping at the first."""
    errors: list[str] = []
    if doc is None:
        return ScenarioConfig(), errors
    if not isinstance(doc, dict):
        return ScenarioConfig(), ["config: top level must be a mapping"]

    cfg = ScenarioConfig()
    if "policy" not in doc:
        errors.append("policy: block is required in a non-empty config")
    for key, value in doc.items():
        if key == "backhaul_delay_ms":
            cfg.backhaul_delay_ms = value if isinstance(value, list) else [value]
        elif key == "seeds":
            cfg.seeds = value if isinstance(value, list) else [value]
        elif key in _BLOCK_TYPES:
            if not isinstance(value, dict):
                errors.append(f"{key}: block must be a mapping")
                continue
            setattr(cfg, key, _coerce(key, _BLOCK_TYPES[key], value, errors))
        else:
            errors.append(f"{key}: unknown block")
    if "traffic" in doc and isinstance(doc["traffic"], dict):
        ups = doc["traffic"].get("ue_per_sector")
        if ups is not None and not isinstance(ups, list):
            cfg.traffic.ue_per_sector = [ups]
    return cfg, errors


def _require_number(errors, name, value, positive=False, nonneg=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        errors.append(f"{name}: must be a finite number")
        return
    if positive and value <= 0:
        errors.append(f"{name}: must be > 0")
    if nonneg and value < 0:
        errors.append(f"{name}: must be >= 0")


def _validate(cfg: ScenarioConfig) -> list[str]:
    errors: list[str] = []
    top, rad, tr, pol, dur, sim = (
        cfg.topology, cfg.radio, cfg.traffic, cfg.policy, cfg.durations, cfg.sim
    )

    if top.sites not in (1, 7):
        errors.append("topology.sites: must be 1 or 7 (wraparound cluster sizes)")
    if top.sectors_per_site != 3:
        errors.append("topology.sectors_per_site: must be 3")
    _require_number(errors, "topology.isd_m", top.isd_m, positive=True)
    if not isinstance(top.small_cells_per_sector, int) or top.small_cells_per_sector < 0:
        errors.append("topology.small_cells_per_sector: must be an integer >= 0")
    _require_number(errors, "topology.hotspot_fraction", top.hotspot_fraction, nonneg=True)
    if isinstance(top.hotspot_fraction, (int, float)) and not 0 <= top.hotspot_fraction <= 1:
        errors.append("topology.hotspot_fraction: must be in [0, 1]")
    _require_number(errors, "topology.hotspot_radius_m", top.hotspot_radius_m, positive=True)
    if (
        isinstance(top.hotspot_radius_m, (int, float))
        and isinstance(top.isd_m, (int, float))
        and top.isd_m > 0
        and top.hotspot_radius_m > top.isd_m / math.sqrt(3.0)
    ):
        errors.append("topology.hotspot_radius_m: exceeds the sector radius")

    for name in (
        "macro_bandwidth_hz", "smallcell_bandwidth_hz", "macro_link_efficiency",
        "macro_spectral_cap_bps_hz", "smallcell_link_efficiency",
        "smallcell_spectral_cap_bps_hz", "smallcell_mac_efficiency",
        "min_link_distance_m", "antenna_beamwidth_deg",
    ):
        _require_number(errors, f"radio.{name}", getattr(rad, name), positive=True)
    for name in (
        "macro_shadowing_std_db", "smallcell_shadowing_std_db",
        "antenna_front_to_back_db",
    ):
        _require_number(errors, f"radio.{name}", getattr(rad, name), nonneg=True)
    for name in (
        "macro_tx_power_dbm", "smallcell_tx_power_dbm", "macro_antenna_gain_dbi",
        "macro_pathloss_const_db", "macro_pathloss_slope_db",
        "smallcell_pathloss_const_db", "smallcell_pathloss_slope_db",
        "ue_noise_figure_db", "smallcell_noise_figure_db", "sinr_floor_db",
        "coverage_snr_threshold_db",
    ):
        _require_number(errors, f"radio.{name}", getattr(rad, name))

    if not isinstance(tr.ue_per_sector, list) or not tr.ue_per_sector:
        errors.append("traffic.ue_per_sector: must be a non-empty list")
    else:
        for i, n in enumerate(tr.ue_per_sector):
            if isinstance(n, bool) or not isinstance(n, int) or n <= 0:
                errors.append(f"traffic.ue_per_sector[{i}]: must be an integer > 0")
    _require_number(errors, "traffic.mean_interarrival_s", tr.mean_interarrival_s, positive=True)
    _require_number(errors, "traffic.file_size_bits", tr.file_size_bits, positive=True)

    if not isinstance(pol.policies, list) or not pol.policies:
        errors.append("policy.policies: must be a non-empty list")
    else:
        valid = {p.value for p in Policy}
        for i, name in enumerate(pol.policies):
            if name not in valid:
                errors.append(
                    f"policy.policies[{i}]: unknown policy {name!r} (expected one of {sorted(valid)})"
                )
    # +-inf is allowed here: it expresses the degenerate always/never-offload
    # modes that threshold tuning sweeps over
    for name in ("wp_snr_threshold_db", "rel12_sinr_threshold_db"):
        v = getattr(pol, name)
        if isinstance(v, bool) or not isinstance(v, (int, float)) or math.isnan(v):
            errors.append(f"policy.{name}: must be a number")

    if not isinstance(cfg.backhaul_delay_ms, list) or not cfg.backhaul_delay_ms:
        errors.append("backhaul_delay_ms: must be a non-empty list")
    else:
        for i, d in enumerate(cfg.backhaul_delay_ms):
            if isinstance(d, bool) or not isinstance(d, (int, float)) or not math.isfinite(d) or d < 0:
                errors.append(f"backhaul_delay_ms[{i}]: must be a number >= 0")

    if not isinstance(cfg.seeds, list) or not cfg.seeds:
        errors.append("seeds: must be a non-empty list")
    else:
        for i, s in enumerate(cfg.seeds):
            if isinstance(s, bool) or not isinstance(s, int):
                errors.append(f"seeds[{i}]: must be an integer")

    _require_number(errors, "durations.warmup_s", dur.warmup_s, nonneg=True)
    _require_number(errors, "durations.measured_s", dur.measured_s, positive=True)
    _require_number(errors, "sim.reallocation_period_s", sim.reallocation_period_s, nonneg=True)
    if not isinstance(sim.max_events, int) or sim.max_events <= 0:
        errors.append("sim.max_events: must be an integer > 0")
    return errors


def validate_config_text(text: str) -> tuple[ScenarioConfig | None, list[str]]:
    """Parses and validates; returns (config, diagnostics). The config is
    None only when the text is not valid YAML at all."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        return None, [f"config: invalid YAML: {exc}"]
    cfg, errors = parse_config(doc)
    errors.extend(_validate(cfg))
    return cfg, errors


def load_config(path: str) -> ScenarioConfig:
    """Loads and validates a config file; raises ConfigError on any problem."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    cfg, errors = validate_config_text(text)
    if errors or cfg is None:
        raise ConfigError(errors or ["config: unreadable"])
    return cfg


def config_digest(cfg: ScenarioConfig) -> str:
    """Stable hash of the effective configuration (defaults applied)."""
    blob = repr(cfg).encode()
    return hashlib.sha256(blob).hexdigest()


def derive_run_seed(master_seed: int, ue_per_sector: int, replicate_seed: int) -> int:
    """Per-run seed shared by every policy and delay point of a replicate,
    so policies are compared under common topologies and arrival processes."""
    blob = f"{master_seed}|{ue_per_sector}|{replicate_seed}".encode()
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "big")
