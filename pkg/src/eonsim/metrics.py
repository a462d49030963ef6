"""Blocking, drop and utilization reporting, plus CSV/JSON serialization.

The stable per-seed CSV schema (column order is part of the interface):

    seed, strategy, band_plan, n_requests, n_blocked, n_dropped,
    n_provisioned, n_compressed, n_delayed, bp_total,
    bp_type_1, bp_type_2a, bp_type_2b, bp_type_3a, bp_type_3b,
    util_h00 .. util_h23

Undefined fractions (zero denominators) serialize as empty cells, never as 0.
util_hXX columns carry day 1 of the hourly series; the full per-day series,
pending counts and stream/config digests live in the JSON report.
"""

from __future__ import annotations

import csv
import json
import statistics
from dataclasses import dataclass, field
from pathlib import Path

TYPE_COLUMNS = ("1", "2a", "2b", "3a", "3b")

CSV_COLUMNS = (
    ["seed", "strategy", "band_plan", "n_requests", "n_blocked", "n_dropped",
     "n_provisioned", "n_compressed", "n_delayed", "bp_total"]
    + [f"bp_type_{t}" for t in TYPE_COLUMNS]
    + [f"util_h{h:02d}" for h in range(24)]
)

SCALAR_FIELDS = (
    "n_requests", "n_blocked", "n_dropped", "n_provisioned",
    "n_compressed", "n_delayed", "n_pending",
)


@dataclass
class MetricsReport:
    """Outcome counters and the hourly utilization series of one seeded run."""

    seed: int
    strategy: str
    band_plan: str
    config_digest: str
    stream_digest: str
    n_requests: int
    n_blocked: int
    n_dropped: int
    n_provisioned: int
    n_compressed: int
    n_delayed: int
    n_pending: int
    per_type: dict[str, dict[str, int]]
    hourly_utilization: list[list[float]]
    event_rows: list[tuple] = field(default_factory=list)

    def bp_total(self) -> float | None:
        return self.n_blocked / self.n_requests if self.n_requests else None

    def bp_of_type(self, type_id: str) -> float | None:
        counts = self.per_type.get(type_id)
        if not counts or counts["requests"] == 0:
            return None
        return counts["blocked"] / counts["requests"]

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "strategy": self.strategy,
            "band_plan": self.band_plan,
            "config_digest": self.config_digest,
            "stream_digest": self.stream_digest,
            "n_requests": self.n_requests,
            "n_blocked": self.n_blocked,
            "n_dropped": self.n_dropped,
            "n_provisioned": self.n_provisioned,
            "n_compressed": self.n_compressed,
            "n_delayed": self.n_delayed,
            "n_pending": self.n_pending,
            "bp_total": self.bp_total(),
            "per_type": self.per_type,
            "bp_per_type": {t: self.bp_of_type(t) for t in self.per_type},
            "hourly_utilization": self.hourly_utilization,
        }


def blocking_probability(report: MetricsReport) -> tuple[float | None, dict[str, float | None]]:
    """Total and per-type blocking fractions; None where undefined."""
    return report.bp_total(), {t: report.bp_of_type(t) for t in report.per_type}


def relative_bp(strategy_bp: float | None, ndnc_bp: float | None) -> float | None:
    """(BP_strategy - BP_NDNC) / BP_NDNC; negative means improvement."""
    if strategy_bp is None or not ndnc_bp:
        return None
    return (strategy_bp - ndnc_bp) / ndnc_bp


def hourly_utilization(
    samples: list[tuple[float, float]], n_days: int, day_ticks: float = 86400.0
) -> list[list[float]]:
    """Time-weighted hourly means of a piecewise-constant utilization signal.

    `samples` are (time, value) change points, sorted by time; each value
    holds until the next sample and the last one persists to the end of the
    reporting window.
    """
    hour = day_ticks / 24.0
    n_hours = n_days * 24
    end = n_days * day_ticks
    integrals = [0.0] * n_hours
    if not samples:
        return [[0.0] * 24 for _ in range(n_days)]

    def accumulate(t0: float, t1: float, value: float) -> None:
        t0, t1 = max(t0, 0.0), min(t1, end)
        while t0 < t1:
            bucket = int(t0 / hour)
            edge = (bucket + 1) * hour
            span = min(t1, edge) - t0
            integrals[bucket] += value * span
            t0 += span

    for (t0, v), (t1, _) in zip(samples, samples[1:]):
        accumulate(t0, t1, v)
    accumulate(samples[-1][0], end, samples[-1][1])
    means = [x / hour for x in integrals]
    return [means[d * 24:(d + 1) * 24] for d in range(n_days)]


@dataclass
class BatchReport:
    reports: list[MetricsReport]
    aggregate: dict

    def to_dict(self) -> dict:
        return {"reports": [r.to_dict() for r in self.reports], "aggregate": self.aggregate}


def _mean_std(values: list[float]) -> tuple[float, float]:
    mean = statistics.fmean(values)
    std = statistics.stdev(values) if len(values) > 1 else 0.0
    return mean, std


def aggregate(reports: list[MetricsReport]) -> dict:
    """Mean and sample std of every scalar metric, plus pooled per-type counts."""
    reports = sorted(reports, key=lambda r: r.seed)
    mean: dict[str, float] = {}
    std: dict[str, float] = {}
    for name in SCALAR_FIELDS:
        mean[name], std[name] = _mean_std([float(getattr(r, name)) for r in reports])
    bps = [r.bp_total() for r in reports]
    if all(bp is not None for bp in bps):
        mean["bp_total"], std["bp_total"] = _mean_std(bps)
    pooled: dict[str, dict[str, int]] = {}
    for r in reports:
        for t, counts in r.per_type.items():
            slot = pooled.setdefault(t, {"requests": 0, "blocked": 0, "dropped": 0})
            for k, v in counts.items():
                slot[k] += v
    bp_per_type = {
        t: (c["blocked"] / c["requests"] if c["requests"] else None) for t, c in pooled.items()
    }
    days = min(len(r.hourly_utilization) for r in reports) if reports else 0
    hourly_mean = [
        [statistics.fmean([r.hourly_utilization[d][h] for r in reports]) for h in range(24)]
        for d in range(days)
    ]
    return {
        "n_seeds": len(reports),
        "mean": mean,
        "std": std,
        "per_type_pooled": pooled,
        "bp_per_type_pooled": bp_per_type,
        "hourly_utilization_mean": hourly_mean,
    }


# -- serialization -------------------------------------------------------------


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _report_row(report: MetricsReport) -> list[str]:
    day1 = report.hourly_utilization[0] if report.hourly_utilization else [0.0] * 24
    row = [
        report.seed, report.strategy, report.band_plan,
        report.n_requests, report.n_blocked, report.n_dropped,
        report.n_provisioned, report.n_compressed, report.n_delayed,
        report.bp_total(),
    ]
    row += [report.bp_of_type(t) for t in TYPE_COLUMNS]
    row += list(day1)
    return [_cell(v) for v in row]


def _aggregate_rows(reports: list[MetricsReport], agg: dict) -> list[list[str]]:
    strategy = reports[0].strategy
    band = reports[0].band_plan
    mean_row = [
        "mean", strategy, band,
        agg["mean"]["n_requests"], agg["mean"]["n_blocked"], agg["mean"]["n_dropped"],
        agg["mean"]["n_provisioned"], agg["mean"]["n_compressed"], agg["mean"]["n_delayed"],
        agg["mean"].get("bp_total"),
    ]
    mean_row += [agg["bp_per_type_pooled"].get(t) for t in TYPE_COLUMNS]
    day1_mean = agg["hourly_utilization_mean"][0] if agg["hourly_utilization_mean"] else [0.0] * 24
    mean_row += list(day1_mean)

    per_type_bps = {t: [r.bp_of_type(t) for r in reports] for t in TYPE_COLUMNS}
    std_row = [
        "std", strategy, band,
        agg["std"]["n_requests"], agg["std"]["n_blocked"], agg["std"]["n_dropped"],
        agg["std"]["n_provisioned"], agg["std"]["n_compressed"], agg["std"]["n_delayed"],
        agg["std"].get("bp_total"),
    ]
    for t in TYPE_COLUMNS:
        vals = [v for v in per_type_bps[t] if v is not None]
        std_row.append(_mean_std(vals)[1] if vals else None)
    for h in range(24):
        std_row.append(_mean_std([r.hourly_utilization[0][h] for r in reports])[1])
    return [[_cell(v) for v in mean_row], [_cell(v) for v in std_row]]


def write_bp_csv(reports: list[MetricsReport], agg: dict, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for report in sorted(reports, key=lambda r: r.seed):
            writer.writerow(_report_row(report))
        for row in _aggregate_rows(reports, agg):
            writer.writerow(row)


def read_bp_csv(path: str | Path) -> list[dict]:
    """Parse a bp.csv back into typed dicts (round-trip helper)."""
    rows = []
    with Path(path).open(newline="") as fh:
        for raw in csv.DictReader(fh):
            row: dict = {}
            for key, value in raw.items():
                if key in ("seed", "strategy", "band_plan"):
                    row[key] = value
                elif value == "":
                    row[key] = None
                else:
                    row[key] = float(value)
            rows.append(row)
    return rows


def write_utilization_csv(reports: list[MetricsReport], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["seed", "day", "hour", "utilization"])
        for report in sorted(reports, key=lambda r: r.seed):
            for day, values in enumerate(report.hourly_utilization):
                for hour, value in enumerate(values):
                    writer.writerow([report.seed, day, hour, repr(value)])


def write_event_csv(report: MetricsReport, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tick", "request_id", "type", "outcome", "rate_gbps", "path", "slots"])
        for row in report.event_rows:
            writer.writerow([repr(row[0]), row[1], row[2], row[3], repr(float(row[4])), row[5], row[6]])


def write_json(payload: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n")
