"""Dynamic request generation: five traffic classes, piecewise-Poisson arrivals.

Each class carries peak/off-peak arrival rates, a holding-time distribution,
an optional compression factor, an optional delay budget and a data-rate set.
All randomness is derived from Random.random() alone so request streams are
byte-stable across interpreter versions; a whole arrival stream is generated
up front, which makes it identical across strategy and band-plan cells for a
fixed seed by construction.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

from .qot import sla_floor
from .topology import NetworkTopology, sample_endpoints

TICKS_PER_MINUTE = 60.0

Interval = tuple[float, float]


@dataclass(frozen=True)
class TrafficTypeSpec:
    type_id: str
    holding_min: Interval              # uniform over minutes; lo == hi means constant
    lambda_peak: float                 # arrivals per second
    lambda_offpeak: float
    compress_factor: float | None      # in (0, 1]; None = non-compressible
    delay_min: Interval | None         # uniform over minutes; None = non-delayable
    rates_gbps: tuple[float, ...]

    def __post_init__(self):
        if not self.rates_gbps:
            raise ValueError(f"type {self.type_id}: empty rate set")
        if self.compress_factor is not None and not 0.0 < self.compress_factor <= 1.0:
            raise ValueError(f"type {self.type_id}: compress factor outside (0, 1]")
        if self.holding_min[0] <= 0 or self.holding_min[1] < self.holding_min[0]:
            raise ValueError(f"type {self.type_id}: bad holding interval")


def default_traffic_types() -> list[TrafficTypeSpec]:
    """The five stock traffic classes (rates in req/s, times in minutes)."""
    return [
        TrafficTypeSpec("1", (5.0, 5.0), 8.0, 2.0, None, None, (100.0, 200.0)),
        TrafficTypeSpec("2a", (30.0, 90.0), 100.0, 25.0, 0.5, (3.0, 5.0), (200.0, 400.0)),
        TrafficTypeSpec("2b", (20.0, 40.0), 48.0, 12.0, 0.5, None, (200.0, 400.0)),
        TrafficTypeSpec("3a", (8.0, 12.0), 8.0, 2.0, None, (2.0, 4.0), (100.0, 200.0)),
        TrafficTypeSpec("3b", (360.0, 600.0), 4.0, 1.0, None, (360.0, 720.0), (400.0,)),
    ]


TYPE_ORDER = ("1", "2a", "2b", "3a", "3b")


@dataclass
class Request:
    """One connection demand; rate_gbps is mutated in place on compression."""

    id: int
    type_id: str
    src: str
    dst: str
    rate_gbps: float
    min_rate_gbps: float
    compress_factor: float | None
    delay_budget_ticks: float
    holding_ticks: float
    arrived_at: float


def _uniform(rng, lo: float, hi: float) -> float:
    return lo if lo == hi else lo + (hi - lo) * rng.random()


def _choice(rng, seq):
    return seq[min(int(rng.random() * len(seq)), len(seq) - 1)]


def _exponential(rng, rate: float) -> float:
    return -math.log(1.0 - rng.random()) / rate


def next_arrival(spec: TrafficTypeSpec, now: float, schedule, rng, load_scale: float = 1.0) -> float:
    """Next arrival time for one class under the peak/off-peak rate profile.

    Samples an exponential gap at the rate in force; a draw that crosses a
    rate boundary is discarded and resampled from the boundary (memorylessness
    makes this exact for a piecewise-constant Poisson process).
    """
    if spec.lambda_peak * load_scale <= 0.0 and spec.lambda_offpeak * load_scale <= 0.0:
        return math.inf
    t = now
    while True:
        lam = (spec.lambda_peak if schedule.in_peak(t) else spec.lambda_offpeak) * load_scale
        boundary = schedule.next_rate_boundary(t)
        if lam <= 0.0:
            t = boundary
            continue
        t_next = t + _exponential(rng, lam)
        if t_next <= boundary:
            return t_next
        t = boundary


def make_request(
    spec: TrafficTypeSpec,
    topology: NetworkTopology,
    now: float,
    rng,
    req_id: int,
) -> Request:
    src, dst = sample_endpoints(topology, rng)
    rate = _choice(rng, spec.rates_gbps)
    holding = _uniform(rng, *spec.holding_min) * TICKS_PER_MINUTE
    delay = _uniform(rng, *spec.delay_min) * TICKS_PER_MINUTE if spec.delay_min else 0.0
    return Request(
        id=req_id,
        type_id=spec.type_id,
        src=src,
        dst=dst,
        rate_gbps=rate,
        min_rate_gbps=sla_floor(rate, spec.compress_factor),
        compress_factor=spec.compress_factor,
        delay_budget_ticks=delay,
        holding_ticks=holding,
        arrived_at=now,
    )


def generate_arrivals(
    specs: list[TrafficTypeSpec],
    topology: NetworkTopology,
    schedule,
    rng,
    count: int,
    load_scale: float,
) -> list[Request]:
    """The full arrival stream for one run, in arrival order.

    Per-class arrival clocks are merged by time (ties broken by class order),
    so the stream depends only on (specs, topology, schedule, seed).
    """
    order = {t: i for i, t in enumerate(TYPE_ORDER)}
    specs = sorted(specs, key=lambda s: order.get(s.type_id, len(order)))
    clocks = [next_arrival(s, 0.0, schedule, rng, load_scale) for s in specs]
    out: list[Request] = []
    for req_id in range(count):
        i = min(range(len(specs)), key=lambda j: clocks[j])
        if clocks[i] == math.inf:
            break
        out.append(make_request(specs[i], topology, clocks[i], rng, req_id))
        clocks[i] = next_arrival(specs[i], clocks[i], schedule, rng, load_scale)
    return out


def stream_digest(arrivals: list[Request]) -> str:
    """Hash of the full arrival stream; equal across matched-seed cells."""
    h = hashlib.sha256()
    for r in arrivals:
        h.update(
            (
                f"{r.id},{r.type_id},{r.src},{r.dst},{r.rate_gbps!r},{r.min_rate_gbps!r},"
                f"{r.delay_budget_ticks!r},{r.holding_ticks!r},{r.arrived_at!r};"
            ).encode()
        )
    return h.hexdigest()
