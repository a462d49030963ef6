"""Command-line front end: validate configs, run scenarios, run sweeps."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import metrics as metrics_mod
from .engine import SimConfig, load_config, run_batch
from .errors import SimulationError
from .metrics import relative_bp, write_bp_csv, write_event_csv, write_json, write_utilization_csv
from .topology import load_topology


def _apply_overrides(doc: dict, overrides: list[str]) -> dict:
    for item in overrides:
        if "=" not in item:
            raise SimulationError(f"override {item!r} is not KEY=VALUE")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = doc
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise SimulationError(f"override {key!r} descends through a non-object")
        node[parts[-1]] = value
    return doc


def _load(args) -> SimConfig:
    path = Path(args.config)
    if not path.exists():
        raise SimulationError(f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SimulationError(f"config file {path} is not valid JSON: {exc}")
    _apply_overrides(doc, args.set or [])
    if args.seeds:
        doc["seeds"] = [int(s) for s in args.seeds.split(",") if s]
    return SimConfig.from_dict(doc)


def _print_summary(batch, quiet: bool) -> None:
    if quiet:
        return
    agg = batch.aggregate
    first = batch.reports[0]
    print(f"strategy={first.strategy} band_plan={first.band_plan} seeds={agg['n_seeds']}")
    bp = agg["mean"].get("bp_total")
    if bp is None:
        print("  bp_total: undefined (no requests)")
    else:
        print(f"  bp_total: {bp:.4f} +/- {agg['std'].get('bp_total', 0.0):.4f}")
    for t, v in sorted(agg["bp_per_type_pooled"].items()):
        shown = "undefined" if v is None else f"{v:.4f}"
        print(f"  bp_type_{t}: {shown}")
    print(
        "  provisioned={:.0f} blocked={:.0f} dropped={:.0f} compressed={:.0f} "
        "delayed={:.0f} pending={:.0f}".format(
            agg["mean"]["n_provisioned"], agg["mean"]["n_blocked"], agg["mean"]["n_dropped"],
            agg["mean"]["n_compressed"], agg["mean"]["n_delayed"], agg["mean"]["n_pending"],
        )
    )


def _write_cell(batch, out: Path, config: SimConfig) -> None:
    out.mkdir(parents=True, exist_ok=True)
    write_bp_csv(batch.reports, batch.aggregate, out / "bp.csv")
    write_utilization_csv(batch.reports, out / "utilization.csv")
    payload = {"config": config.to_dict(), "config_digest": config.digest(), **batch.to_dict()}
    write_json(payload, out / "report.json")
    if config.event_log:
        for report in batch.reports:
            write_event_csv(report, out / f"events_seed{report.seed}.csv")


def cmd_run(args) -> int:
    config = _load(args)
    out = Path(args.out)
    batch = run_batch(config)
    _write_cell(batch, out, config)
    _print_summary(batch, args.quiet)
    if not args.quiet:
        print(f"reports written to {out}")
    return 0


def cmd_sweep(args) -> int:
    config = _load(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cells = {}
    for band in config.sweep_band_plans:
        for strategy in config.sweep_strategies:
            cell_cfg = replace(config, band_plan=band, strategy=strategy)
            batch = run_batch(cell_cfg)
            cells[(band, strategy)] = batch
            _write_cell(batch, out / f"{band}_{strategy}", cell_cfg)
            _print_summary(batch, args.quiet)

    # matched-seed guarantee: one arrival stream per seed across every cell
    per_seed: dict[int, set[str]] = {}
    for batch in cells.values():
        for report in batch.reports:
            per_seed.setdefault(report.seed, set()).add(report.stream_digest)
    mismatched = {s: d for s, d in per_seed.items() if len(d) != 1}
    if mismatched:
        raise SimulationError(f"arrival streams diverged across cells for seeds {sorted(mismatched)}")

    strat_rows = []
    type_rows = []
    for band in config.sweep_band_plans:
        ndnc = cells.get((band, "NDNC"))
        ndnc_bp = ndnc.aggregate["mean"].get("bp_total") if ndnc else None
        ndnc_types = ndnc.aggregate["bp_per_type_pooled"] if ndnc else {}
        for strategy in config.sweep_strategies:
            batch = cells[(band, strategy)]
            bp = batch.aggregate["mean"].get("bp_total")
            strat_rows.append([
                band, strategy,
                metrics_mod._cell(bp),
                metrics_mod._cell(batch.aggregate["std"].get("bp_total")),
                metrics_mod._cell(relative_bp(bp, ndnc_bp)),
            ])
            pooled = batch.aggregate["per_type_pooled"]
            for t in sorted(pooled):
                tbp = batch.aggregate["bp_per_type_pooled"][t]
                type_rows.append([
                    band, strategy, t,
                    pooled[t]["requests"], pooled[t]["blocked"],
                    metrics_mod._cell(tbp),
                    metrics_mod._cell(relative_bp(tbp, ndnc_types.get(t))),
                ])

    import csv

    with (out / "strategy_comparison.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["band_plan", "strategy", "bp_mean", "bp_std", "relative_bp_vs_ndnc"])
        writer.writerows(strat_rows)
    with (out / "type_comparison.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["band_plan", "strategy", "type_id", "n_requests", "n_blocked",
                         "bp", "relative_bp_vs_ndnc"])
        writer.writerows(type_rows)
    write_json(
        {
            "config": config.to_dict(),
            "config_digest": config.digest(),
            "cells": {
                f"{band}_{strategy}": batch.to_dict() for (band, strategy), batch in cells.items()
            },
        },
        out / "sweep.json",
    )
    if not args.quiet:
        print(f"sweep reports written to {out}")
    return 0


def cmd_validate(args) -> int:
    config = _load(args)
    topo = load_topology(config.topology_path)
    if not args.quiet:
        print(
            f"config OK: {len(topo.nodes)} nodes, {len(topo.links)} links, "
            f"mean link {topo.mean_link_length_km:.1f} km, strategy {config.strategy}, "
            f"band plan {config.band_plan}, {len(config.seeds)} seeds x {config.demands_per_seed} demands"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eonsim",
        description="Dynamic-traffic provisioning simulator for C and C+L elastic optical networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("run", cmd_run), ("sweep", cmd_sweep), ("validate", cmd_validate)):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="dotted config override, repeatable")
        p.add_argument("--seeds", help="comma-separated seed list override")
        p.add_argument("--quiet", action="store_true")
        p.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
