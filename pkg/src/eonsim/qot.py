"""GSNR estimation and the GSNR-window capacity mapping.

The estimator is pluggable; the shipped analytic default derives GSNR from a
single-span reference, a per-span accumulation term and a linear penalty on
the fractional occupancy of the candidate's band along the path:

    gsnr = ref_gsnr_db - 10*log10(N_spans) - load_penalty_db * rho + band_offset

where N_spans sums ceil(length/span_km) over the path links and rho is the
mean fractional band occupancy over those links. Per-slot data rate and
modulation come from a threshold table with inclusive lower window edges.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field

from .spectrum import SlotRange, SpectrumGrid, Lightpath
from .topology import NetworkTopology


@dataclass(frozen=True)
class ModulationRow:
    min_gsnr_db: float
    modulation: str
    slot_rate_gbps: float


# Not measured hardware data: chosen so 100/200/400 Gbps demands fit in 1-2
# slots at plausible GSNRs. Overridable via config [qot.table].
DEFAULT_MODULATION_TABLE = (
    ModulationRow(9.0, "DP-QPSK", 100.0),
    ModulationRow(13.0, "DP-8QAM", 200.0),
    ModulationRow(16.0, "DP-16QAM", 300.0),
    ModulationRow(19.5, "DP-32QAM", 400.0),
)


@dataclass(frozen=True)
class GsnrReport:
    gsnr_db: float
    slot_rate_gbps: float
    modulation: str


@dataclass(frozen=True)
class QotEstimatorSpec:
    kind: str = "analytic-default"
    ref_gsnr_db: float = 22.0
    span_km: float = 80.0
    load_penalty_db: float = 2.0
    lband_offset_db: float = -1.0

    def __post_init__(self):
        if self.span_km <= 0:
            raise ValueError("span_km must be positive")
        if self.load_penalty_db < 0:
            raise ValueError("load_penalty_db must be >= 0")


def validate_table(table: tuple[ModulationRow, ...] | list[ModulationRow]) -> tuple[ModulationRow, ...]:
    rows = tuple(table)
    if not rows:
        raise ValueError("modulation table is empty")
    for prev, cur in zip(rows, rows[1:]):
        if cur.min_gsnr_db <= prev.min_gsnr_db or cur.slot_rate_gbps <= prev.slot_rate_gbps:
            raise ValueError("modulation table rows must strictly increase in threshold and rate")
    return rows


def path_spans(spec: QotEstimatorSpec, topology: NetworkTopology, path) -> int:
    return sum(
        math.ceil(topology.length_of(u, v) / spec.span_km) for u, v in zip(path, path[1:])
    )


def estimate_gsnr(
    spec: QotEstimatorSpec,
    topology: NetworkTopology,
    path,
    candidate: SlotRange,
    grid: SpectrumGrid,
) -> float:
    """GSNR of a candidate lightpath under the current grid occupancy."""
    n_spans = path_spans(spec, topology, path)
    links = topology.path_links(path)
    per_band = grid.plan.slots_per_band
    rho = sum(grid.band_occupancy(link, candidate.band) for link in links) / (len(links) * per_band)
    gsnr = spec.ref_gsnr_db - 10.0 * math.log10(n_spans) - spec.load_penalty_db * rho
    if candidate.band == "L":
        gsnr += spec.lband_offset_db
    return gsnr


def slot_capacity(table, gsnr_db: float) -> GsnrReport:
    """Highest table row whose threshold is <= gsnr_db; below all rows -> 0."""
    thresholds = [row.min_gsnr_db for row in table]
    i = bisect_right(thresholds, gsnr_db) - 1
    if i < 0:
        return GsnrReport(gsnr_db, 0.0, "none")
    row = table[i]
    return GsnrReport(gsnr_db, row.slot_rate_gbps, row.modulation)


def sla_floor(rate_gbps: float, compress_factor: float | None) -> float:
    """Minimum acceptable rate: the compression bound for compressible traffic."""
    return rate_gbps * compress_factor if compress_factor is not None else rate_gbps


def reestimate_all(
    spec: QotEstimatorSpec,
    topology: NetworkTopology,
    grid: SpectrumGrid,
    active: list[Lightpath],
    table=DEFAULT_MODULATION_TABLE,
) -> list[tuple[int, float, bool]]:
    """Re-estimate every active lightpath against the current grid.

    Returns (lightpath_id, new_gsnr_db, retained) per lightpath; retained is
    False when the achievable rate over its allocated slots falls below the
    SLA floor. Pure: evaluates all lightpaths against the same grid state.
    """
    results = []
    for lp in active:
        gsnr = estimate_gsnr(spec, topology, lp.path, lp.slots, grid)
        achievable = slot_capacity(table, gsnr).slot_rate_gbps * lp.slots.length
        results.append((lp.id, gsnr, achievable >= lp.min_rate_gbps))
    return results
