"""Deterministic fluid discrete-event engine.

Per-UE Poisson file arrivals drain over two legs at constant rates between
events. Every arrival and genuine leg completion re-evaluates the affected
sector(s): the splitting policy recomputes macro fractions (closed-form
water-filling), baselines recompute equal shares, and small-cell rates follow
the round-robin sharing counts of each AP. The small-cell leg of a flow is
gated by the backhaul delay: it serves no bits before arrival + l, charged
once per flow.

Re-splitting note: a flow is never re-split at its *own* leg-completion
event (the surviving leg just keeps draining). Without this rule the
rates-proportional re-split would schedule a geometric cascade of ever
smaller completions. Any later event in the sector re-splits it normally;
the one exception is a surviving leg with zero rate, which forces an
immediate re-split so the flow cannot stall.
"""

from __future__ import annotations

import heapq
import math
from collections import deque

import numpy as np

from .allocator import UeLinkState, de_split, effective_rate, split_ratio
from .baselines import Policy, PolicyConfig, Route, rel12_decide, wp_decide
from .config import ScenarioConfig
from .kernels import waterfill
from .metrics import FlowRecord, MetricsReport, build_report
from .radio import Topology, generate_topology

__all__ = ["run", "arrivals", "sector_reallocate", "SimulationError"]

K_LEG, K_ARRIVAL, K_REALLOC = 0, 1, 2
_KIND_NAMES = {K_LEG: "LegCompletion", K_ARRIVAL: "Arrival", K_REALLOC: "ReallocationDue"}

# a re-split never leaves less than this on a leg: sub-bit crumbs are below
# the fluid model's meaningful resolution and their completions would keep
# re-triggering re-splits of other nearly-done flows
_CRUMB_BITS = 0.5


class SimulationError(RuntimeError):
    pass


def arrivals(ue_id: int, seed: int, duration_s: float,
             mean_interarrival_s: float = 1.0) -> list[float]:
    """Poisson arrival times in [0, duration) from the (seed, ue_id) substream."""
    if duration_s <= 0:
        raise ValueError("arrivals: duration must be > 0")
    if mean_interarrival_s <= 0:
        raise ValueError("arrivals: mean inter-arrival must be > 0")
    rng = np.random.default_rng(np.random.SeedSequence((seed, ue_id)))
    out: list[float] = []
    t = 0.0
    chunk = max(16, int(duration_s / mean_interarrival_s * 1.2))
    while True:
        for gap in rng.exponential(mean_interarrival_s, chunk).tolist():
            t += gap
            if t >= duration_s:
                return out
            out.append(t)


def sector_reallocate(states: list[UeLinkState], policy: Policy) -> dict[int, float]:
    """Macro rate per UE for one sector snapshot.

    The splitting policy applies the water-filling fractions; every other
    policy shares macro time equally across the given UEs. States carry
    already-shared small-cell rates.
    """
    if not states:
        return {}
    if policy is Policy.PROPOSED:
        from .allocator import opt_alloc

        alloc = opt_alloc(states)
        return {s.ue_id: alloc.fractions[s.ue_id] * s.macro_peak_bps for s in states}
    share = 1.0 / len(states)
    return {s.ue_id: share * s.macro_peak_bps for s in states}


class _Flow:
    __slots__ = (
        "flow_id", "ue", "arrival_s", "size_bits", "macro_rem", "sc_rem",
        "macro_rate", "sc_rate", "gate_s", "gate_scheduled", "last_sync",
        "version", "served_macro", "served_sc", "completion_s",
    )

    def __init__(self, flow_id: int, ue: int, arrival_s: float, size_bits: float):
        self.flow_id = flow_id
        self.ue = ue
        self.arrival_s = arrival_s
        self.size_bits = size_bits
        self.macro_rem = size_bits  # common buffer sits at the macro
        self.sc_rem = 0.0
        self.macro_rate = 0.0
        self.sc_rate = 0.0
        self.gate_s: float | None = None
        self.gate_scheduled = False
        self.last_sync = arrival_s
        self.version = 0
        self.served_macro = 0.0
        self.served_sc = 0.0
        self.completion_s: float | None = None


class _Engine:
    def __init__(self, scenario: ScenarioConfig, seed: int, *,
                 on_realloc=None, trace_path: str | None = None,
                 topology: Topology | None = None):
        errors = scenario.validate()
        if errors:
            raise ValueError("invalid scenario: " + "; ".join(errors))
        if not scenario.is_single_run():
            raise ValueError(
                "run() needs a single (policy, load, delay) point; "
                "use ScenarioConfig.for_run or the experiment orchestrator"
            )
        self.cfg = scenario
        self.seed = seed
        self.policy = Policy(scenario.policy.policies[0])
        self.pcfg = PolicyConfig(
            policy=self.policy,
            wp_snr_threshold_db=scenario.policy.wp_snr_threshold_db,
            rel12_sinr_threshold_db=scenario.policy.rel12_sinr_threshold_db,
        )
        self.delay_s = scenario.backhaul_delay_ms[0] / 1000.0
        self.on_realloc = on_realloc
        self.trace = open(trace_path, "w", encoding="utf-8") if trace_path else None

        self.top: Topology = topology if topology is not None else generate_topology(scenario, seed)
        ues = self.top.ues
        self.n_ue = len(ues)
        self.peak = [u.macro_peak_bps for u in ues]
        self.single = [u.smallcell_peak_bps for u in ues]
        self.ap_of = [u.covering_ap for u in ues]
        self.sector_of = [u.serving_sector for u in ues]
        self.sinr = [u.macro_sinr_db for u in ues]
        self.ap_q = [u.best_ap_snr_db for u in ues]
        for u in ues:
            if u.macro_peak_bps == 0.0 and u.smallcell_peak_bps == 0.0:
                raise SimulationError(
                    f"scenario infeasible: ue {u.ue_id} has no coverage on either RAT"
                )

        n_sector = len(self.top.sectors)
        n_ap = len(self.top.small_cells)
        self.queues: list[deque[_Flow]] = [deque() for _ in range(self.n_ue)]
        self.sec_active: list[set[int]] = [set() for _ in range(n_sector)]
        self.ap_members: list[set[int]] = [set() for _ in range(n_ap)]
        self.member_of: list[int | None] = [None] * self.n_ue

        # lazily-toggled busy-time accounting, clipped to the measured window
        self.warm = scenario.durations.warmup_s
        self.end = self.warm + scenario.durations.measured_s
        self.sec_busy = [0.0] * n_sector
        self.sec_since: list[float | None] = [None] * n_sector
        self.ap_busy = [0.0] * n_ap
        self.ap_since: list[float | None] = [None] * n_ap

        # stale small-cell rate reports (optional): last reported value per UE
        self.lag = scenario.sim.feedback_lag and self.delay_s > 0
        self.report_r = [0.0] * self.n_ue
        self.report_t: list[float | None] = [None] * self.n_ue

        arr_seed = int(np.random.SeedSequence((seed, 7)).generate_state(1)[0])
        mean = scenario.traffic.mean_interarrival_s
        pending = []
        for ue in range(self.n_ue):
            for t in arrivals(ue, arr_seed, self.end, mean):
                pending.append((t, ue))
        pending.sort()
        self.flow_meta = pending  # flow_id -> (arrival, ue)
        self.flows: list[_Flow | None] = [None] * len(pending)
        self.heap: list[tuple[float, int, int, int]] = [
            (t, K_ARRIVAL, fid, 0) for fid, (t, ue) in enumerate(pending)
        ]
        heapq.heapify(self.heap)
        self.completed: list[_Flow] = []
        self.size_bits = scenario.traffic.file_size_bits
        self.n_events = 0
        self.max_events = scenario.sim.max_events
        self.period = scenario.sim.reallocation_period_s
        if self.period > 0:
            heapq.heappush(self.heap, (self.period, K_REALLOC, -1, 0))
        self._aps_touched: set[int] = set()

    # --- bookkeeping -------------------------------------------------------

    def _trace(self, t: float, kind: int, fid: int, ue: int, detail: str):
        if self.trace is not None:
            self.trace.write(f"{t!r},{_KIND_NAMES[kind]},{fid},{ue},{detail}\n")

    def _clip(self, a: float, b: float) -> float:
        return max(0.0, min(b, self.end) - max(a, self.warm))

    def _set_sector_live(self, s: int, live: bool, now: float):
        since = self.sec_since[s]
        if live and since is None:
            self.sec_since[s] = now
        elif not live and since is not None:
            self.sec_busy[s] += self._clip(since, now)
            self.sec_since[s] = None

    def _set_ap_live(self, m: int, live: bool, now: float):
        since = self.ap_since[m]
        if live and since is None:
            self.ap_since[m] = now
        elif not live and since is not None:
            self.ap_busy[m] += self._clip(since, now)
            self.ap_since[m] = None

    def _ap_add(self, m: int, ue: int):
        self.ap_members[m].add(ue)
        self.member_of[ue] = m
        self._aps_touched.add(m)

    def _ap_remove(self, ue: int):
        m = self.member_of[ue]
        if m is not None:
            self.ap_members[m].discard(ue)
            self.member_of[ue] = None
            self._aps_touched.add(m)

    def _sync(self, flow: _Flow, now: float):
        dt = now - flow.last_sync
        if dt > 0.0:
            if flow.macro_rate > 0.0 and flow.macro_rem > 0.0:
                new = max(0.0, flow.macro_rem - flow.macro_rate * dt)
                flow.served_macro += flow.macro_rem - new
                flow.macro_rem = new
            if flow.sc_rate > 0.0 and flow.sc_rem > 0.0:
                new = max(0.0, flow.sc_rem - flow.sc_rate * dt)
                flow.served_sc += flow.sc_rem - new
                flow.sc_rem = new
        flow.last_sync = now

    def _snap(self, flow: _Flow, now: float):
        """Finish legs whose drain time is below float time resolution,
        which otherwise re-fire at the same timestamp forever."""
        if flow.macro_rem > 0.0 and flow.macro_rate > 0.0 \
                and now + flow.macro_rem / flow.macro_rate <= now:
            flow.served_macro += flow.macro_rem
            flow.macro_rem = 0.0
        if flow.sc_rem > 0.0 and flow.sc_rate > 0.0 \
                and now + flow.sc_rem / flow.sc_rate <= now:
            flow.served_sc += flow.sc_rem
            flow.sc_rem = 0.0

    def _decision_rate(self, ue: int, now: float, current: float) -> float:
        """Small-cell rate as seen by the splitting decision; goes stale by
        up to the backhaul delay when feedback_lag is on."""
        if not self.lag:
            return current
        last = self.report_t[ue]
        if last is None or now - last >= self.delay_s:
            self.report_r[ue] = current
            self.report_t[ue] = now
        return self.report_r[ue]

    def _shared_rate(self, ue: int, prospective: bool) -> float:
        """Current small-cell rate under round-robin sharing; a UE not yet
        draining counts itself on top of the existing sharers."""
        m = self.ap_of[ue]
        if m is None:
            return 0.0
        count = len(self.ap_members[m])
        if prospective and self.member_of[ue] != m:
            count += 1
        return self.single[ue] / max(1, count)

    # --- flow lifecycle ----------------------------------------------------

    def _ensure_gate(self, flow: _Flow, now: float):
        if flow.gate_s is None:
            flow.gate_s = flow.arrival_s + self.delay_s
        if flow.gate_s <= now:
            if self.member_of[flow.ue] is None and self.ap_of[flow.ue] is not None:
                self._ap_add(self.ap_of[flow.ue], flow.ue)
        elif not flow.gate_scheduled:
            flow.gate_scheduled = True
            heapq.heappush(self.heap, (flow.gate_s, K_REALLOC, flow.flow_id, 0))

    def _start_service(self, flow: _Flow, now: float):
        """Head-of-line service start: whole-file routing for the one-RAT
        policies, a one-time delay-equalizing split for DE; the optimal
        policy splits adaptively in the sector pass."""
        ue = flow.ue
        if self.policy in (Policy.WP, Policy.REL12):
            q = self.ap_q[ue] if self.ap_of[ue] is not None else None
            if self.policy is Policy.WP:
                route = wp_decide(self.sinr[ue], q, self.pcfg)
            else:
                route = rel12_decide(self.sinr[ue], q, self.pcfg)
            if route is Route.SMALL_CELL_ONLY:
                flow.sc_rem = flow.macro_rem
                flow.macro_rem = 0.0
                self._ensure_gate(flow, now)
        elif self.policy is Policy.DE:
            # the greedy per-UE baseline commits its split per file; only the
            # equal macro share keeps adjusting afterwards
            n_active = len(self.sec_active[self.sector_of[ue]])
            share = 1.0 / max(1, n_active)
            r_dec = self._decision_rate(ue, now, self._shared_rate(ue, prospective=True))
            if share * self.peak[ue] == 0.0 and r_dec == 0.0:
                x = 1.0
            else:
                x = de_split(share, self.peak[ue], r_dec,
                             self._remaining_delay(flow, now), flow.size_bits)
            self._apply_split(flow, x, now)

    def _apply_split(self, flow: _Flow, x: float, now: float):
        total = flow.macro_rem + flow.sc_rem
        had_sc = flow.sc_rem > 0.0
        macro = x * total
        sc = total - macro
        if sc < _CRUMB_BITS:
            macro, sc = total, 0.0
        elif macro < _CRUMB_BITS:
            macro, sc = 0.0, total
        flow.macro_rem = macro
        flow.sc_rem = sc
        if flow.sc_rem > 0.0:
            self._ensure_gate(flow, now)
        elif had_sc and self.member_of[flow.ue] is not None:
            self._ap_remove(flow.ue)

    # --- the re-allocation fixpoint -----------------------------------------

    def _realloc(self, now: float, sectors: set[int], exclude: _Flow | None):
        touched: set[int] = set()
        aps_seen: set[int] = set()
        pending = set(sectors)
        for _ in range(8):
            aps_seen |= self._aps_touched
            for m in self._aps_touched:
                for ue in self.ap_members[m]:
                    pending.add(self.sector_of[ue])
            self._aps_touched.clear()
            if not pending:
                break
            touched |= pending
            round_sectors, pending = sorted(pending), set()
            for s in round_sectors:
                self._realloc_sector(s, now, exclude)
            # membership toggles during the sector pass re-dirty their APs
        aps_seen |= self._aps_touched
        self._aps_touched.clear()

        for s in sorted(touched):
            live_macro = False
            for ue in sorted(self.sec_active[s]):
                flow = self.queues[ue][0]
                m = self.member_of[ue]
                if m is not None and flow.sc_rem > 0.0:
                    flow.sc_rate = self.single[ue] / len(self.ap_members[m])
                else:
                    flow.sc_rate = 0.0
                if flow.macro_rem > 0.0:
                    live_macro = True
                self._push_prediction(flow, now)
            self._set_sector_live(s, live_macro, now)
        for m in aps_seen:
            self._set_ap_live(m, bool(self.ap_members[m]), now)

    def _realloc_sector(self, s: int, now: float, exclude: _Flow | None):
        actives = sorted(self.sec_active[s])
        if not actives:
            return
        hols = []
        for ue in actives:
            flow = self.queues[ue][0]
            self._sync(flow, now)
            hols.append(flow)

        if self.policy is Policy.PROPOSED:
            self._alloc_proposed(actives, hols, now, exclude)
        else:
            # the local macro scheduler shares time equally across flows
            # with macro bits outstanding (fluid proportional-fair proxy)
            macro_flows = [f for f in hols if f.macro_rem > 0.0]
            share = 1.0 / len(macro_flows) if macro_flows else 0.0
            for ue, flow in zip(actives, hols):
                flow.macro_rate = share * self.peak[ue] if flow.macro_rem > 0.0 else 0.0

    def _remaining_delay(self, flow: _Flow, now: float) -> float:
        """Backhaul delay still ahead of the head-of-line file; zero once the
        gate has opened (the delay is charged once per flow)."""
        if flow.gate_s is None:
            return self.delay_s
        return max(0.0, flow.gate_s - now)

    def _alloc_proposed(self, actives, hols, now, exclude):
        n = len(actives)
        reffs = [0.0] * n
        snapshot = [None] * n  # (r_dec, l_rem, f_rem) as seen by the allocation
        ratios, ratio_idx = [], []
        for i, (ue, flow) in enumerate(zip(actives, hols)):
            f_rem = flow.macro_rem + flow.sc_rem
            if f_rem <= 0.0:
                continue
            r_dec = self._decision_rate(ue, now, self._shared_rate(ue, prospective=True))
            l_rem = self._remaining_delay(flow, now)
            snapshot[i] = (r_dec, l_rem, f_rem)
            reffs[i] = effective_rate(r_dec, l_rem, f_rem)
            if self.peak[ue] > 0.0:
                ratios.append(reffs[i] / self.peak[ue])
                ratio_idx.append(i)
        alphas = [0.0] * n
        if ratios:
            sub, level, _ = waterfill(np.array(ratios))
            for j, i in enumerate(ratio_idx):
                # the closed form can overshoot 1.0 by an ulp
                alphas[i] = min(1.0, float(sub[j]))
        for i, (ue, flow) in enumerate(zip(actives, hols)):
            macro_cap = alphas[i] * self.peak[ue]
            if flow is not exclude and flow.macro_rem + flow.sc_rem > 0.0:
                if macro_cap + reffs[i] > 0.0:
                    x = split_ratio(alphas[i], self.peak[ue], reffs[i])
                    self._apply_split(flow, x, now)
            flow.macro_rate = macro_cap if flow.macro_rem > 0.0 else 0.0
        if self.on_realloc is not None:
            states, fracs = [], {}
            for i, ue in enumerate(actives):
                if snapshot[i] is not None:
                    r_dec, l_rem, f_rem = snapshot[i]
                    states.append(UeLinkState(ue, self.peak[ue], r_dec, l_rem, f_rem))
                    fracs[ue] = alphas[i]
            if states:
                self.on_realloc(now, fracs, states)

    def _push_prediction(self, flow: _Flow, now: float):
        flow.version += 1
        t_next = math.inf
        if flow.macro_rem > 0.0 and flow.macro_rate > 0.0:
            t_next = now + flow.macro_rem / flow.macro_rate
        if flow.sc_rem > 0.0 and flow.sc_rate > 0.0:
            t_next = min(t_next, now + flow.sc_rem / flow.sc_rate)
        if flow.sc_rem > 0.0 and flow.sc_rate == 0.0 and flow.gate_s is not None \
                and flow.gate_s > now and not flow.gate_scheduled:
            flow.gate_scheduled = True
            heapq.heappush(self.heap, (flow.gate_s, K_REALLOC, flow.flow_id, 0))
        if math.isfinite(t_next):
            heapq.heappush(self.heap, (t_next, K_LEG, flow.flow_id, flow.version))
            return
        if flow.macro_rem + flow.sc_rem == 0.0 or flow.gate_scheduled:
            return
        if (self.policy is Policy.PROPOSED and flow.sc_rem == 0.0
                and flow.macro_rem > 0.0 and flow.macro_rate == 0.0):
            # eliminated UE holding undelivered macro bits; transient, since
            # elimination implies another active UE whose next event in this
            # sector forces a re-split onto the small cell
            return
        raise SimulationError(
            f"flow {flow.flow_id} stalled at t={now}: the policy routed bits "
            "to a leg with no capacity"
        )

    # --- event handlers ----------------------------------------------------

    def _handle_arrival(self, fid: int, now: float):
        ue = self.flow_meta[fid][1]
        flow = _Flow(fid, ue, now, self.size_bits)
        self.flows[fid] = flow
        q = self.queues[ue]
        q.append(flow)
        self._trace(now, K_ARRIVAL, fid, ue, "queued" if len(q) > 1 else "hol")
        if len(q) == 1:
            self.sec_active[self.sector_of[ue]].add(ue)
            self._start_service(flow, now)
            self._realloc(now, {self.sector_of[ue]}, exclude=None)

    def _handle_leg(self, fid: int, version: int, now: float):
        flow = self.flows[fid]
        if flow is None or flow.completion_s is not None or version != flow.version:
            return
        self._sync(flow, now)
        self._snap(flow, now)
        macro_done = flow.macro_rem == 0.0
        sc_done = flow.sc_rem == 0.0
        ue = flow.ue
        if macro_done and sc_done:
            flow.completion_s = now
            self.completed.append(flow)
            self._trace(now, K_LEG, fid, ue, "complete")
            q = self.queues[ue]
            q.popleft()
            if self.member_of[ue] is not None:
                self._ap_remove(ue)
            if q:
                self._start_service(q[0], now)
            else:
                self.sec_active[self.sector_of[ue]].discard(ue)
            self._realloc(now, {self.sector_of[ue]}, exclude=None)
            return
        if not macro_done and not sc_done:
            # misfired prediction (float residue); re-arm without rippling
            self._push_prediction(flow, now)
            return
        self._trace(now, K_LEG, fid, ue, "macro" if macro_done else "smallcell")
        if sc_done and self.member_of[ue] is not None:
            self._ap_remove(ue)
        stalled = sc_done and flow.macro_rem > 0.0 and flow.macro_rate == 0.0
        exclude = None if stalled else flow
        self._realloc(now, {self.sector_of[ue]}, exclude=exclude)

    def _handle_realloc_due(self, fid: int, now: float):
        if fid < 0:
            sectors = {s for s in range(len(self.sec_active)) if self.sec_active[s]}
            self._trace(now, K_REALLOC, -1, -1, "periodic")
            self._realloc(now, sectors, exclude=None)
            if self.heap:
                heapq.heappush(self.heap, (now + self.period, K_REALLOC, -1, 0))
            return
        flow = self.flows[fid]
        if flow is None or flow.completion_s is not None:
            return
        flow.gate_scheduled = False
        q = self.queues[flow.ue]
        if q and q[0] is flow and flow.sc_rem > 0.0:
            self._trace(now, K_REALLOC, fid, flow.ue, "gate")
            self._ensure_gate(flow, now)
            self._realloc(now, {self.sector_of[flow.ue]}, exclude=None)

    # --- main loop ---------------------------------------------------------

    def run(self) -> MetricsReport:
        try:
            while self.heap:
                self.n_events += 1
                if self.n_events > self.max_events:
                    raise SimulationError("event budget exhausted; likely nontermination")
                t, kind, fid, ver = heapq.heappop(self.heap)
                if kind == K_LEG:
                    self._handle_leg(fid, ver, t)
                elif kind == K_ARRIVAL:
                    self._handle_arrival(fid, t)
                else:
                    self._handle_realloc_due(fid, t)
            incomplete = sum(1 for f in self.flows if f is None or f.completion_s is None)
            if incomplete:
                raise SimulationError(f"{incomplete} flows never completed")
        finally:
            if self.trace is not None:
                self.trace.close()

        records = [
            FlowRecord(
                flow_id=f.flow_id, ue_id=f.ue, arrival_s=f.arrival_s,
                size_bits=f.size_bits, macro_bits=f.served_macro,
                smallcell_bits=f.served_sc, smallcell_available_s=f.gate_s,
                completion_s=f.completion_s,
            )
            for f in self.completed
            if self.warm <= f.arrival_s < self.end
        ]
        records.sort(key=lambda r: r.flow_id)

        measured = self.end - self.warm
        n_sector = len(self.sec_busy)
        macro_util = sum(self.sec_busy) / (n_sector * measured) if n_sector else 0.0
        n_ap = len(self.ap_busy)
        wlan_util = sum(self.ap_busy) / (n_ap * measured) if n_ap else 0.0
        return build_report(records, macro_util, wlan_util)


def run(scenario: ScenarioConfig, seed: int, *, on_realloc=None,
        trace_path: str | None = None, topology: Topology | None = None) -> MetricsReport:
    """Simulates one (policy, load, delay) point; deterministic in
    (scenario, seed).

    on_realloc, when given, is called at every splitting-policy reallocation
    as on_realloc(time, fractions, states) with the sector snapshot that
    produced the fractions. `topology` replays a prebuilt drop instead of
    generating one, for tests and debugging.
    """
    return _Engine(scenario, seed, on_realloc=on_realloc, trace_path=trace_path,
                   topology=topology).run()
