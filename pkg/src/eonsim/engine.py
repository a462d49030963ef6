"""Discrete-event simulation core.

One run owns a seeded RNG, a spectrum grid and an event queue. Events at equal
timestamps process as departures, then re-estimations, then arrivals, then
retry sweeps, so freed capacity is visible to new demand and queued demand
retries after same-instant arrivals. Every run is single-threaded and fully
deterministic; randomness is consumed only while pre-generating the arrival
stream, which therefore matches across strategy/band cells for a seed.
"""

from __future__ import annotations

import hashlib
import heapq
import json
import math
import random
from dataclasses import dataclass
from pathlib import Path

from . import metrics as metrics_mod
from . import provisioning
from .errors import ConfigError, GridStateError
from .qot import (
    DEFAULT_MODULATION_TABLE,
    ModulationRow,
    QotEstimatorSpec,
    reestimate_all,
    validate_table,
)
from .routing import k_shortest_paths, rsa
from .spectrum import BandPlan, Lightpath, SpectrumGrid
from .topology import load_topology
from .traffic import (
    Request,
    TrafficTypeSpec,
    default_traffic_types,
    generate_arrivals,
    stream_digest,
)

DAY_TICKS = 86400.0

# event kind priorities at equal timestamps
_DEPARTURE, _REESTIMATE, _ARRIVAL, _RETRY = 0, 1, 2, 3


@dataclass(frozen=True)
class PeakSchedule:
    """Daily peak window and re-estimation cadence, all in ticks (seconds)."""

    peak_start: float = 8 * 3600.0
    peak_end: float = 20 * 3600.0
    deferral_end: float = 22 * 3600.0          # peak_end + margin
    reest_peak: float = 10.0
    reest_offpeak: float = 100.0
    day_ticks: float = DAY_TICKS

    def __post_init__(self):
        if not 0 <= self.peak_start < self.peak_end < self.deferral_end <= self.day_ticks:
            raise ConfigError("schedule must satisfy 0 <= peak_start < peak_end < deferral_end <= 24h")
        if self.reest_peak > self.reest_offpeak:
            raise ConfigError("peak re-estimation period must not exceed the off-peak one")

    def in_peak(self, t: float) -> bool:
        tod = t % self.day_ticks
        return self.peak_start <= tod < self.peak_end

    def next_rate_boundary(self, t: float) -> float:
        day0 = math.floor(t / self.day_ticks) * self.day_ticks
        for boundary in (day0 + self.peak_start, day0 + self.peak_end,
                         day0 + self.day_ticks + self.peak_start):
            if boundary > t:
                return boundary
        raise AssertionError("unreachable")

    def next_reestimate(self, t: float) -> float:
        """Next cadence point: t_p steps inside the peak window, t_o outside,
        re-synchronizing at the window boundaries."""
        day0 = math.floor(t / self.day_ticks) * self.day_ticks
        tod = t - day0
        if tod < self.peak_start:
            return min(t + self.reest_offpeak, day0 + self.peak_start)
        if tod < self.peak_end:
            return min(t + self.reest_peak, day0 + self.peak_end)
        return min(t + self.reest_offpeak, day0 + self.day_ticks + self.peak_start)


@dataclass(frozen=True)
class SimConfig:
    topology_path: str
    band_plan: str = "C"
    strategy: str = "DACA"
    seeds: tuple[int, ...] = tuple(range(1, 11))
    demands_per_seed: int = 15000
    horizon_days: int = 3
    exclude_first_day: bool = False
    load_scale: float = 0.02
    traffic_types: tuple[TrafficTypeSpec, ...] = tuple(default_traffic_types())
    qot_spec: QotEstimatorSpec = QotEstimatorSpec()
    modulation_table: tuple[ModulationRow, ...] = DEFAULT_MODULATION_TABLE
    k_paths: int = 3
    max_slots_per_lightpath: int = 4
    schedule: PeakSchedule = PeakSchedule()
    slots_per_band: int = 133
    slot_width_ghz: float = 37.5
    event_log: bool = False
    sweep_strategies: tuple[str, ...] = provisioning.STRATEGIES
    sweep_band_plans: tuple[str, ...] = ("C", "C+L")

    def validate(self) -> None:
        if not self.seeds:
            raise ConfigError("seeds must be nonempty")
        if self.demands_per_seed <= 0:
            raise ConfigError("demands_per_seed must be positive")
        if self.strategy not in provisioning.STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}")
        if self.band_plan not in ("C", "C+L"):
            raise ConfigError(f"unknown band plan {self.band_plan!r}")
        if self.horizon_days <= 0:
            raise ConfigError("horizon_days must be positive")
        if self.load_scale <= 0:
            raise ConfigError("load_scale must be positive")
        if self.k_paths <= 0 or self.max_slots_per_lightpath <= 0:
            raise ConfigError("routing parameters must be positive")
        if self.slots_per_band <= 0:
            raise ConfigError("slots_per_band must be positive")
        validate_table(self.modulation_table)
        for s in self.sweep_strategies:
            if s not in provisioning.STRATEGIES:
                raise ConfigError(f"unknown sweep strategy {s!r}")
        for b in self.sweep_band_plans:
            if b not in ("C", "C+L"):
                raise ConfigError(f"unknown sweep band plan {b!r}")

    # -- serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "topology": self.topology_path,
            "band_plan": self.band_plan,
            "strategy": self.strategy,
            "seeds": list(self.seeds),
            "demands_per_seed": self.demands_per_seed,
            "horizon_days": self.horizon_days,
            "exclude_first_day": self.exclude_first_day,
            "event_log": self.event_log,
            "traffic": {
                "load_scale": self.load_scale,
                "types": [
                    {
                        "type_id": t.type_id,
                        "holding_min": list(t.holding_min),
                        "lambda_peak": t.lambda_peak,
                        "lambda_offpeak": t.lambda_offpeak,
                        "compress_factor": t.compress_factor,
                        "delay_min": list(t.delay_min) if t.delay_min else None,
                        "rates_gbps": list(t.rates_gbps),
                    }
                    for t in self.traffic_types
                ],
            },
            "qot": {
                "kind": self.qot_spec.kind,
                "ref_gsnr_db": self.qot_spec.ref_gsnr_db,
                "span_km": self.qot_spec.span_km,
                "load_penalty_db": self.qot_spec.load_penalty_db,
                "lband_offset_db": self.qot_spec.lband_offset_db,
                "table": [[r.min_gsnr_db, r.modulation, r.slot_rate_gbps] for r in self.modulation_table],
            },
            "routing": {"k": self.k_paths, "max_slots_per_lightpath": self.max_slots_per_lightpath},
            "schedule": {
                "peak_start_hour": self.schedule.peak_start / 3600.0,
                "peak_end_hour": self.schedule.peak_end / 3600.0,
                "deferral_margin_hours": (self.schedule.deferral_end - self.schedule.peak_end) / 3600.0,
                "reestimate_peak_ticks": self.schedule.reest_peak,
                "reestimate_offpeak_ticks": self.schedule.reest_offpeak,
            },
            "spectrum": {"slots_per_band": self.slots_per_band, "slot_width_ghz": self.slot_width_ghz},
            "sweep": {"strategies": list(self.sweep_strategies), "band_plans": list(self.sweep_band_plans)},
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SimConfig":
        try:
            topo = doc["topology"]
        except KeyError:
            raise ConfigError("config is missing the 'topology' key") from None
        traffic_doc = doc.get("traffic", {})
        types_doc = traffic_doc.get("types")
        if types_doc is None:
            types = tuple(default_traffic_types())
        else:
            types = tuple(
                TrafficTypeSpec(
                    type_id=str(t["type_id"]),
                    holding_min=tuple(float(x) for x in t["holding_min"]),
                    lambda_peak=float(t["lambda_peak"]),
                    lambda_offpeak=float(t["lambda_offpeak"]),
                    compress_factor=None if t.get("compress_factor") is None else float(t["compress_factor"]),
                    delay_min=None if t.get("delay_min") is None else tuple(float(x) for x in t["delay_min"]),
                    rates_gbps=tuple(float(x) for x in t["rates_gbps"]),
                )
                for t in types_doc
            )
        qot_doc = doc.get("qot", {})
        table_doc = qot_doc.get("table")
        table = (
            DEFAULT_MODULATION_TABLE
            if table_doc is None
            else tuple(ModulationRow(float(r[0]), str(r[1]), float(r[2])) for r in table_doc)
        )
        sched_doc = doc.get("schedule", {})
        peak_start = float(sched_doc.get("peak_start_hour", 8.0)) * 3600.0
        peak_end = float(sched_doc.get("peak_end_hour", 20.0)) * 3600.0
        margin = float(sched_doc.get("deferral_margin_hours", 2.0)) * 3600.0
        schedule = PeakSchedule(
            peak_start=peak_start,
            peak_end=peak_end,
            deferral_end=peak_end + margin,
            reest_peak=float(sched_doc.get("reestimate_peak_ticks", 10.0)),
            reest_offpeak=float(sched_doc.get("reestimate_offpeak_ticks", 100.0)),
        )
        routing_doc = doc.get("routing", {})
        spectrum_doc = doc.get("spectrum", {})
        sweep_doc = doc.get("sweep", {})
        try:
            cfg = cls(
                topology_path=str(topo),
                band_plan=str(doc.get("band_plan", "C")),
                strategy=str(doc.get("strategy", "DACA")),
                seeds=tuple(int(s) for s in doc.get("seeds", list(range(1, 11)))),
                demands_per_seed=int(doc.get("demands_per_seed", 15000)),
                horizon_days=int(doc.get("horizon_days", 3)),
                exclude_first_day=bool(doc.get("exclude_first_day", False)),
                load_scale=float(traffic_doc.get("load_scale", 0.02)),
                traffic_types=types,
                qot_spec=QotEstimatorSpec(
                    kind=str(qot_doc.get("kind", "analytic-default")),
                    ref_gsnr_db=float(qot_doc.get("ref_gsnr_db", 22.0)),
                    span_km=float(qot_doc.get("span_km", 80.0)),
                    load_penalty_db=float(qot_doc.get("load_penalty_db", 2.0)),
                    lband_offset_db=float(qot_doc.get("lband_offset_db", -1.0)),
                ),
                modulation_table=table,
                k_paths=int(routing_doc.get("k", 3)),
                max_slots_per_lightpath=int(routing_doc.get("max_slots_per_lightpath", 4)),
                schedule=schedule,
                slots_per_band=int(spectrum_doc.get("slots_per_band", 133)),
                slot_width_ghz=float(spectrum_doc.get("slot_width_ghz", 37.5)),
                event_log=bool(doc.get("event_log", False)),
                sweep_strategies=tuple(sweep_doc.get("strategies", provisioning.STRATEGIES)),
                sweep_band_plans=tuple(sweep_doc.get("band_plans", ["C", "C+L"])),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid config value: {exc}") from exc
        cfg.validate()
        return cfg

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def load_config(path: str | Path) -> SimConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {p} is not valid JSON: {exc}") from exc
    return SimConfig.from_dict(doc)


class _Run:
    """Mutable state of one seeded simulation; the ctx seen by provisioning."""

    def __init__(self, config: SimConfig, seed: int, topology=None):
        config.validate()
        self.config = config
        self.seed = seed
        self.topology = topology if topology is not None else load_topology(config.topology_path)
        self.plan = BandPlan.from_name(config.band_plan, config.slots_per_band, config.slot_width_ghz)
        self.grid = SpectrumGrid(self.topology.link_keys, self.plan)
        self.schedule = config.schedule
        self.strategy = config.strategy
        self.pending = provisioning.PendingQueue()
        self.release_epoch = 0
        self.active: dict[int, Lightpath] = {}
        self.paths_cache: dict[tuple[str, str], list] = {}
        self._heap: list = []
        self._seq = 0
        self._retry_scheduled: set[float] = set()
        self._lightpath_seq = 0
        self.now = 0.0
        self.horizon = config.horizon_days * DAY_TICKS

        self.samples: list[tuple[float, float]] = [(0.0, 0.0)]
        self.counts = {
            "requests": 0, "blocked": 0, "provisioned": 0,
            "compressed": 0, "delayed": 0, "dropped": 0,
        }
        type_ids = [t.type_id for t in config.traffic_types]
        self.per_type = {t: {"requests": 0, "blocked": 0, "dropped": 0} for t in type_ids}
        # warm-up flag excludes day-1 arrivals from the counters, never from the dynamics
        self.count_from = DAY_TICKS if config.exclude_first_day else 0.0
        self._arrived_at: dict[int, float] = {}
        self.event_rows: list[tuple] = []

    # -- event plumbing -------------------------------------------------------

    def _push(self, at: float, prio: int, payload) -> None:
        heapq.heappush(self._heap, (at, prio, self._seq, payload))
        self._seq += 1

    def schedule_retry_at(self, t: float) -> None:
        if t not in self._retry_scheduled:
            self._retry_scheduled.add(t)
            self._push(t, _RETRY, None)

    def _sample_utilization(self, t: float) -> None:
        self.samples.append((t, self.grid.utilization()))

    # -- ctx protocol for provisioning ---------------------------------------

    def try_provision(self, request: Request, t: float) -> Lightpath | None:
        key = (request.src, request.dst)
        paths = self.paths_cache.get(key)
        if paths is None:
            paths = k_shortest_paths(self.topology, request.src, request.dst, self.config.k_paths)
            self.paths_cache[key] = paths
        cand = rsa(
            request, self.topology, self.grid, self.plan, self.config.qot_spec,
            self.config.modulation_table, self.config.k_paths,
            self.config.max_slots_per_lightpath, paths=paths,
        )
        if cand is None:
            return None
        lp = Lightpath(
            id=self._lightpath_seq,
            request_id=request.id,
            type_id=request.type_id,
            path=cand.path,
            slots=cand.slots,
            rate_gbps=request.rate_gbps,
            min_rate_gbps=request.min_rate_gbps,
            gsnr_db=cand.gsnr_db,
            modulation=cand.modulation,
            provisioned_at=t,
            expires_at=t + request.holding_ticks,
        )
        self._lightpath_seq += 1
        self.grid.allocate(lp, self.topology.path_links(cand.path))
        self.active[lp.id] = lp
        self._arrived_at[lp.id] = request.arrived_at
        self._push(lp.expires_at, _DEPARTURE, lp.id)
        self._sample_utilization(t)
        return lp

    # -- event handlers --------------------------------------------------------

    def _on_departure(self, t: float, lightpath_id: int) -> None:
        lp = self.active.pop(lightpath_id, None)
        if lp is None:
            return  # dropped earlier at re-estimation
        self.grid.release(lp.id)
        self._arrived_at.pop(lp.id, None)
        self._sample_utilization(t)
        self.release_epoch += 1
        # pending retries run on the tick grid, so arrivals inside the open
        # sub-tick window keep first claim on freed capacity
        self.schedule_retry_at(math.ceil(t))

    def _on_reestimate(self, t: float, trace=None) -> None:
        if trace is not None:
            trace.setdefault("reestimate_times", []).append(t)
        if self.active:
            ordered = [self.active[i] for i in sorted(self.active)]
            results = reestimate_all(
                self.config.qot_spec, self.topology, self.grid, ordered, self.config.modulation_table
            )
            dropped_any = False
            for lp_id, gsnr, retained in results:
                lp = self.active[lp_id]
                lp.gsnr_db = gsnr
                if not retained:
                    del self.active[lp_id]
                    self.grid.release(lp_id)
                    if self._arrived_at.pop(lp_id, 0.0) >= self.count_from:
                        self.counts["dropped"] += 1
                        self.per_type[lp.type_id]["dropped"] += 1
                    dropped_any = True
                    if self.config.event_log:
                        self.event_rows.append(
                            (t, lp.request_id, lp.type_id, "dropped", lp.rate_gbps,
                             "-".join(lp.path), f"{lp.slots.band}:{lp.slots.start}+{lp.slots.length}")
                        )
            if dropped_any:
                self._sample_utilization(t)
                self.release_epoch += 1
                self.schedule_retry_at(math.ceil(t))
        nxt = self.schedule.next_reestimate(t)
        self._push(nxt, _REESTIMATE, None)

    def _apply_outcome(self, outcome: provisioning.Outcome, t: float) -> None:
        req = outcome.request
        counted = req.arrived_at >= self.count_from
        if outcome.kind is provisioning.OutcomeKind.PROVISIONED:
            if counted:
                self.counts["provisioned"] += 1
                if outcome.compressed:
                    self.counts["compressed"] += 1
            label = "provisioned-compressed" if outcome.compressed else "provisioned"
            lp = outcome.lightpath
            if self.config.event_log:
                self.event_rows.append(
                    (t, req.id, req.type_id, label, lp.rate_gbps,
                     "-".join(lp.path), f"{lp.slots.band}:{lp.slots.start}+{lp.slots.length}")
                )
        elif outcome.kind is provisioning.OutcomeKind.DELAYED:
            if counted:
                self.counts["delayed"] += 1
            if self.config.event_log:
                self.event_rows.append((t, req.id, req.type_id, "delayed", req.rate_gbps, "", ""))
        else:
            if counted:
                self.counts["blocked"] += 1
                self.per_type[req.type_id]["blocked"] += 1
            if self.config.event_log:
                self.event_rows.append((t, req.id, req.type_id, "blocked", req.rate_gbps, "", ""))

    def _check_state(self) -> None:
        expected = sum(
            lp.slots.length * (len(lp.path) - 1) for lp in self.active.values()
        )
        if expected != self.grid.occupied_slot_links:
            raise GridStateError(
                f"conservation violated at t={self.now}: grid {self.grid.occupied_slot_links}, "
                f"active sum {expected}"
            )

    # -- main loop ---------------------------------------------------------------

    def simulate(self, arrivals: list[Request], validate_state=False, trace=None) -> "metrics_mod.MetricsReport":
        for req in arrivals:
            self._push(req.arrived_at, _ARRIVAL, req)
        self._push(0.0, _REESTIMATE, None)
        remaining = len(arrivals)

        while self._heap:
            at, prio, _seq, payload = self._heap[0]
            if at > self.horizon:
                break
            if remaining == 0 and not self.active and at > self.now:
                break
            heapq.heappop(self._heap)
            self.now = at
            if prio == _DEPARTURE:
                self._on_departure(at, payload)
            elif prio == _REESTIMATE:
                self._on_reestimate(at, trace)
            elif prio == _ARRIVAL:
                remaining -= 1
                req: Request = payload
                if req.arrived_at >= self.count_from:
                    self.counts["requests"] += 1
                    self.per_type[req.type_id]["requests"] += 1
                outcome = provisioning.handle(self.strategy, req, at, self)
                self._apply_outcome(outcome, at)
            else:
                self._retry_scheduled.discard(at)
                for outcome in provisioning.retry_pending(self.strategy, at, self):
                    self._apply_outcome(outcome, at)
            if validate_state:
                self._check_state()

        hourly = metrics_mod.hourly_utilization(
            self.samples, n_days=self.config.horizon_days, day_ticks=self.schedule.day_ticks
        )
        return metrics_mod.MetricsReport(
            seed=self.seed,
            strategy=self.strategy,
            band_plan=self.plan.name,
            config_digest=self.config.digest(),
            stream_digest=stream_digest(arrivals),
            n_requests=self.counts["requests"],
            n_blocked=self.counts["blocked"],
            n_dropped=self.counts["dropped"],
            n_provisioned=self.counts["provisioned"],
            n_compressed=self.counts["compressed"],
            n_delayed=self.counts["delayed"],
            n_pending=sum(1 for e in self.pending if e.request.arrived_at >= self.count_from),
            per_type={k: dict(v) for k, v in self.per_type.items()},
            hourly_utilization=hourly,
            event_rows=list(self.event_rows),
        )


def build_arrivals(config: SimConfig, seed: int, topology=None) -> list[Request]:
    """The deterministic arrival stream for (config traffic, seed)."""
    topo = topology if topology is not None else load_topology(config.topology_path)
    rng = random.Random(seed)
    return generate_arrivals(
        list(config.traffic_types), topo, config.schedule, rng,
        config.demands_per_seed, config.load_scale,
    )


def run(config: SimConfig, seed: int, arrivals=None, validate_state=False, trace=None, topology=None):
    """Simulate one seed; returns its MetricsReport."""
    topo = topology if topology is not None else load_topology(config.topology_path)
    if arrivals is None:
        arrivals = build_arrivals(config, seed, topology=topo)
    sim = _Run(config, seed, topology=topo)
    return sim.simulate(arrivals, validate_state=validate_state, trace=trace)


def run_batch(config: SimConfig, validate_state=False):
    """All seeds of a config; per-seed reports plus a mean/std aggregate."""
    config.validate()
    topo = load_topology(config.topology_path)
    reports = [run(config, seed, validate_state=validate_state, topology=topo) for seed in config.seeds]
    return metrics_mod.BatchReport(reports=reports, aggregate=metrics_mod.aggregate(reports))
