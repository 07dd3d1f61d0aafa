"""Simplified radio abstraction for the multi-RAT scenario.

Hexagonal macro layout (1 or 7 sites, 3 sectors each) with torus wraparound,
log-distance path loss plus per-link lognormal shadowing, a parabolic 3-sector
azimuth antenna pattern, and truncated-Shannon maps from link quality to
macro spectral efficiency and small-cell PHY rate. Small-cell APs drop
uniformly per sector on 3 channels chosen by least received interference
power; UEs drop clustered around APs.

Everything here is deterministic in (config, seed) and immutable once
generated; the simulator treats a drop as a static radio snapshot.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .config import ScenarioConfig

__all__ = [
    "Sector",
    "SmallCell",
    "UeNode",
    "Topology",
    "generate_topology",
    "macro_spectral_efficiency",
    "smallcell_rate",
    "truncated_shannon",
    "pathloss_db",
    "antenna_gain_db",
    "noise_dbm",
    "dump_topology_csv",
]

THERMAL_NOISE_DBM_HZ = -174.0


# --- elementary link maps ---------------------------------------------------

def pathloss_db(distance_m: float | np.ndarray, const_db: float, slope_db: float,
                min_distance_m: float = 3.0) -> float | np.ndarray:
    """Log-distance path loss, const + slope*log10(d_km), clamped below
    min_distance_m to keep the budget finite."""
    d = np.maximum(distance_m, min_distance_m)
    return const_db + slope_db * np.log10(d / 1000.0)


def antenna_gain_db(angle_off_boresight_deg: float | np.ndarray, peak_dbi: float = 14.0,
                    beamwidth_deg: float = 70.0, front_to_back_db: float = 20.0):
    """Parabolic azimuth pattern: peak gain minus 12*(angle/beamwidth)^2,
    floored by the front-to-back ratio."""
    a = np.mod(np.asarray(angle_off_boresight_deg, dtype=np.float64) + 180.0, 360.0) - 180.0
    return peak_dbi - np.minimum(12.0 * (a / beamwidth_deg) ** 2, front_to_back_db)


def noise_dbm(bandwidth_hz: float, noise_figure_db: float) -> float:
    return THERMAL_NOISE_DBM_HZ + 10.0 * math.log10(bandwidth_hz) + noise_figure_db


def truncated_shannon(sinr_db: float, efficiency: float, cap_bps_hz: float,
                      floor_db: float = -6.5) -> float:
    """Attenuated-and-capped Shannon spectral efficiency in bits/s/Hz;
    zero below the decodability floor."""
    if math.isnan(sinr_db):
        raise ValueError("truncated_shannon: SINR must not be NaN")
    if sinr_db < floor_db:
        return 0.0
    if math.isinf(sinr_db):
        return cap_bps_hz
    se = efficiency * math.log2(1.0 + 10.0 ** (sinr_db / 10.0))
    return min(se, cap_bps_hz)


def macro_spectral_efficiency(sinr_db: float, efficiency: float = 0.75,
                              cap_bps_hz: float = 4.8, floor_db: float = -6.5) -> float:
    """Macro downlink spectral efficiency for a given SINR."""
    return truncated_shannon(sinr_db, efficiency, cap_bps_hz, floor_db)


def smallcell_rate(snr_db: float, sharing_count: int, bandwidth_hz: float = 20e6,
                   mac_efficiency: float = 0.6, link_efficiency: float = 0.75,
                   cap_bps_hz: float = 6.0, floor_db: float = -6.5) -> float:
    """Small-cell PHY rate under fluid round-robin sharing.

    sharing_count is the number of UEs with active small-cell traffic on the
    AP (including this one); the airtime divides equally among them.
    """
    se = truncated_shannon(snr_db, link_efficiency, cap_bps_hz, floor_db)
    return bandwidth_hz * mac_efficiency * se / max(1, sharing_count)


# --- geometry ---------------------------------------------------------------

_AXES = np.array(
    [[1.0, 0.0],
     [0.5, math.sqrt(3.0) / 2.0],
     [-0.5, math.sqrt(3.0) / 2.0]]
)


def _site_positions(sites: int, isd: float) -> np.ndarray:
    if sites == 1:
        return np.zeros((1, 2))
    ring = [
        (isd * math.cos(math.radians(60.0 * i)), isd * math.sin(math.radians(60.0 * i)))
        for i in range(6)
    ]
    return np.array([(0.0, 0.0)] + ring)


def _wrap_offsets(sites: int, isd: float) -> np.ndarray:
    """Translation lattice of the cluster; the 3x3 neighborhood suffices for
    nearest-mirror distances."""
    if sites == 7:
        t1 = isd * np.array([2.5, math.sqrt(3.0) / 2.0])
        t2 = isd * np.array([0.5, 1.5 * math.sqrt(3.0)])
    else:
        t1 = isd * np.array([1.0, 0.0])
        t2 = isd * np.array([0.5, math.sqrt(3.0) / 2.0])
    offs = [i * t1 + j * t2 for i in (-1, 0, 1) for j in (-1, 0, 1)]
    return np.array(offs)


def _in_hexagon(p: np.ndarray, isd: float) -> bool:
    # Voronoi cell of the triangular lattice: within isd/2 of the center
    # along each of the three neighbor axes
    return bool(np.all(np.abs(_AXES @ p) <= isd / 2.0 + 1e-9))


def _angular_distance_deg(a: float, b: float) -> float:
    return abs((a - b + 180.0) % 360.0 - 180.0)


def _sample_in_sector(rng: np.random.Generator, isd: float, boresight_deg: float) -> np.ndarray:
    radius = isd / math.sqrt(3.0)
    while True:
        p = rng.uniform(-radius, radius, 2)
        if not _in_hexagon(p, isd):
            continue
        ang = math.degrees(math.atan2(p[1], p[0]))
        if _angular_distance_deg(ang, boresight_deg) <= 60.0:
            return p


# --- topology ----------------------------------------------------------------

@dataclass(slots=True)
class Sector:
    index: int
    site: int
    boresight_deg: float


@dataclass(slots=True)
class SmallCell:
    index: int
    sector: int
    position: tuple[float, float]
    channel: int
    tx_power_dbm: float


@dataclass(slots=True)
class UeNode:
    ue_id: int
    position: tuple[float, float]
    drop_sector: int
    serving_sector: int
    covering_ap: int | None
    macro_sinr_db: float
    macro_peak_bps: float
    best_ap_snr_db: float | None
    smallcell_peak_bps: float


@dataclass
class Topology:
    isd_m: float
    site_positions: np.ndarray
    sectors: list[Sector]
    small_cells: list[SmallCell]
    ues: list[UeNode]
    wrap_offsets_m: np.ndarray

    def wrap_distance(self, a, b) -> float:
        """Shortest distance on the wraparound torus."""
        d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
        return float(np.min(np.linalg.norm(d - self.wrap_offsets_m, axis=1)))


def _mirror_geometry(points: np.ndarray, sources: np.ndarray, offsets: np.ndarray):
    """Distances and bearing angles from every mirror image of every source
    to every point. Returns (dist, angle_deg) with shape (P, S, O)."""
    mirrors = sources[None, :, None, :] + offsets[None, None, :, :]
    d = points[:, None, None, :] - mirrors
    dist = np.linalg.norm(d, axis=-1)
    ang = np.degrees(np.arctan2(d[..., 1], d[..., 0]))
    return dist, ang


class _LinkCalculator:
    """Static link budgets for one drop: per-(UE, sector) macro power and
    per-(UE, AP) small-cell power, strongest mirror per pair."""

    def __init__(self, cfg: ScenarioConfig, sites: np.ndarray, offsets: np.ndarray,
                 sectors: list[Sector], aps: list[SmallCell]):
        self.cfg = cfg
        self.sites = sites
        self.offsets = offsets
        self.sectors = sectors
        self.aps = aps
        self.boresights = np.array([s.boresight_deg for s in sectors])
        self.sector_site = np.array([s.site for s in sectors])
        self.ap_pos = (
            np.array([a.position for a in aps]) if aps else np.zeros((0, 2))
        )
        self.ap_channel = np.array([a.channel for a in aps], dtype=int)
        rad = cfg.radio
        self.macro_noise_dbm = noise_dbm(rad.macro_bandwidth_hz, rad.ue_noise_figure_db)
        self.wlan_noise_dbm = noise_dbm(rad.smallcell_bandwidth_hz, rad.smallcell_noise_figure_db)

    def macro_rx_dbm(self, pos: np.ndarray, site_shadow_db: np.ndarray) -> np.ndarray:
        """Received power from every sector at one position (strongest mirror)."""
        rad = self.cfg.radio
        dist, ang = _mirror_geometry(pos[None, :], self.sites, self.offsets)
        dist, ang = dist[0], ang[0]  # (sites, mirrors)
        pl = pathloss_db(dist, rad.macro_pathloss_const_db, rad.macro_pathloss_slope_db,
                         rad.min_link_distance_m)
        rx = np.empty(len(self.sectors))
        for k, sec in enumerate(self.sectors):
            gain = antenna_gain_db(
                ang[sec.site] - sec.boresight_deg,
                rad.macro_antenna_gain_dbi,
                rad.antenna_beamwidth_deg,
                rad.antenna_front_to_back_db,
            )
            per_mirror = rad.macro_tx_power_dbm + gain - pl[sec.site] - site_shadow_db[sec.site]
            rx[k] = per_mirror.max()
        return rx

    def wlan_rx_dbm(self, pos: np.ndarray, ap_shadow_db: np.ndarray) -> np.ndarray:
        """Received power from every AP at one position (strongest mirror)."""
        rad = self.cfg.radio
        if len(self.aps) == 0:
            return np.zeros(0)
        dist, _ = _mirror_geometry(pos[None, :], self.ap_pos, self.offsets)
        dist = dist[0].min(axis=1)
        pl = pathloss_db(dist, rad.smallcell_pathloss_const_db,
                         rad.smallcell_pathloss_slope_db, rad.min_link_distance_m)
        return rad.smallcell_tx_power_dbm - pl - ap_shadow_db

    def macro_sinr_db(self, rx_dbm: np.ndarray) -> tuple[int, float]:
        lin = 10.0 ** (rx_dbm / 10.0)
        serving = int(np.argmax(lin))
        noise = 10.0 ** (self.macro_noise_dbm / 10.0)
        interference = lin.sum() - lin[serving]
        sinr = 10.0 * math.log10(lin[serving] / (noise + interference))
        return serving, sinr

    def wlan_quality_db(self, rx_dbm: np.ndarray) -> tuple[int | None, float | None]:
        """Best AP and its SNR (or SINR when co-channel interference is on)."""
        if rx_dbm.size == 0:
            return None, None
        best = int(np.argmax(rx_dbm))
        noise = 10.0 ** (self.wlan_noise_dbm / 10.0)
        lin = 10.0 ** (rx_dbm / 10.0)
        if self.cfg.radio.wlan_interference:
            same = (self.ap_channel == self.ap_channel[best])
            interference = lin[same].sum() - lin[best]
        else:
            interference = 0.0
        q = 10.0 * math.log10(lin[best] / (noise + interference))
        return best, q


def _place_aps(cfg: ScenarioConfig, rng: np.random.Generator, sites: np.ndarray,
               sectors: list[Sector], offsets: np.ndarray) -> list[SmallCell]:
    """Uniform per-sector AP drop; each AP then picks the channel with the
    least interference power received from the APs already placed."""
    rad = cfg.radio
    aps: list[SmallCell] = []
    for sec in sectors:
        for _ in range(cfg.topology.small_cells_per_sector):
            local = _sample_in_sector(rng, cfg.topology.isd_m, sec.boresight_deg)
            pos = sites[sec.site] + local
            powers = np.zeros(3)
            for other in aps:
                diff = pos - np.asarray(other.position)
                dist = float(np.min(np.linalg.norm(diff - offsets, axis=1)))
                pl = pathloss_db(dist, rad.smallcell_pathloss_const_db,
                                 rad.smallcell_pathloss_slope_db, rad.min_link_distance_m)
                powers[other.channel] += 10.0 ** ((other.tx_power_dbm - pl) / 10.0)
            channel = int(np.argmin(powers))
            aps.append(SmallCell(
                index=len(aps),
                sector=sec.index,
                position=(float(pos[0]), float(pos[1])),
                channel=channel,
                tx_power_dbm=rad.smallcell_tx_power_dbm,
            ))
    return aps


def generate_topology(cfg: ScenarioConfig, seed: int) -> Topology:
    """Deterministic network drop for one (config, seed) pair.

    UEs are clustered: hotspot_fraction of them land uniformly within
    hotspot_radius_m of a uniformly chosen AP of their sector, the rest
    uniformly in the sector. UEs dead on both RATs are resampled when
    redrop_uncovered is set.
    """
    top = cfg.topology
    if top.small_cells_per_sector < 0:
        raise ValueError("small_cells_per_sector must be >= 0")
    ue_per_sector = cfg.traffic.ue_per_sector[0]
    if ue_per_sector <= 0:
        raise ValueError("ue_per_sector must be > 0")
    if top.hotspot_radius_m > top.isd_m / math.sqrt(3.0):
        raise ValueError("hotspot radius exceeds the sector radius")

    sites = _site_positions(top.sites, top.isd_m)
    offsets = _wrap_offsets(top.sites, top.isd_m)
    sectors = [
        Sector(index=s * top.sectors_per_site + j, site=s, boresight_deg=120.0 * j)
        for s in range(top.sites)
        for j in range(top.sectors_per_site)
    ]

    rng_ap = np.random.default_rng(np.random.SeedSequence((seed, 11)))
    aps = _place_aps(cfg, rng_ap, sites, sectors, offsets)
    links = _LinkCalculator(cfg, sites, offsets, sectors, aps)

    rad = cfg.radio
    rng_ue = np.random.default_rng(np.random.SeedSequence((seed, 12)))
    ues: list[UeNode] = []
    for sec in sectors:
        sector_aps = [a for a in aps if a.sector == sec.index]
        for _ in range(ue_per_sector):
            for attempt in range(1000):
                if sector_aps and rng_ue.random() < top.hotspot_fraction:
                    home = sector_aps[int(rng_ue.integers(len(sector_aps)))]
                    radius = top.hotspot_radius_m * math.sqrt(rng_ue.random())
                    theta = rng_ue.uniform(0.0, 2.0 * math.pi)
                    pos = np.asarray(home.position) + radius * np.array(
                        [math.cos(theta), math.sin(theta)]
                    )
                else:
                    pos = sites[sec.site] + _sample_in_sector(
                        rng_ue, top.isd_m, sec.boresight_deg
                    )
                site_shadow = rng_ue.normal(0.0, rad.macro_shadowing_std_db, len(sites))
                ap_shadow = rng_ue.normal(0.0, rad.smallcell_shadowing_std_db, len(aps))

                serving, sinr = links.macro_sinr_db(links.macro_rx_dbm(pos, site_shadow))
                peak = rad.macro_bandwidth_hz * macro_spectral_efficiency(
                    sinr, rad.macro_link_efficiency, rad.macro_spectral_cap_bps_hz,
                    rad.sinr_floor_db,
                )
                best_ap, ap_q = links.wlan_quality_db(links.wlan_rx_dbm(pos, ap_shadow))
                covering = None
                sc_peak = 0.0
                if best_ap is not None and ap_q is not None and ap_q >= rad.coverage_snr_threshold_db:
                    covering = best_ap
                    sc_peak = smallcell_rate(
                        ap_q, 1, rad.smallcell_bandwidth_hz, rad.smallcell_mac_efficiency,
                        rad.smallcell_link_efficiency, rad.smallcell_spectral_cap_bps_hz,
                        rad.sinr_floor_db,
                    )
                feasible = peak > 0.0 or sc_peak > 0.0
                if feasible or not top.redrop_uncovered:
                    break
            else:
                raise RuntimeError(
                    f"could not place a feasible UE in sector {sec.index} after 1000 tries"
                )
            ues.append(UeNode(
                ue_id=len(ues),
                position=(float(pos[0]), float(pos[1])),
                drop_sector=sec.index,
                serving_sector=serving,
                covering_ap=covering,
                macro_sinr_db=sinr,
                macro_peak_bps=peak,
                best_ap_snr_db=ap_q,
                smallcell_peak_bps=sc_peak,
            ))

    return Topology(
        isd_m=top.isd_m,
        site_positions=sites,
        sectors=sectors,
        small_cells=aps,
        ues=ues,
        wrap_offsets_m=offsets,
    )


def dump_topology_csv(top: Topology, path: str) -> None:
    """Positions, associations and link qualities, one row per node."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([
            "kind", "id", "x_m", "y_m", "sector", "channel", "serving_sector",
            "covering_ap", "macro_sinr_db", "best_ap_snr_db",
            "macro_peak_bps", "smallcell_peak_bps",
        ])
        for i, pos in enumerate(top.site_positions):
            w.writerow(["site", i, repr(float(pos[0])), repr(float(pos[1]))] + [""] * 8)
        for ap in top.small_cells:
            w.writerow([
                "ap", ap.index, repr(ap.position[0]), repr(ap.position[1]),
                ap.sector, ap.channel, "", "", "", "", "", "",
            ])
        for ue in top.ues:
            w.writerow([
                "ue", ue.ue_id, repr(ue.position[0]), repr(ue.position[1]),
                ue.drop_sector, "", ue.serving_sector,
                "" if ue.covering_ap is None else ue.covering_ap,
                repr(ue.macro_sinr_db),
                "" if ue.best_ap_snr_db is None else repr(ue.best_ap_snr_db),
                repr(ue.macro_peak_bps), repr(ue.smallcell_peak_bps),
            ])
