"""Run the method grid (rows) over several datasets (columns) and tabulate it.

Rows are the baselines plus the cache agent with and without updates; optional
extra rows add the monolithic-extraction and gold-schema variants. Each cell
is one ``run_experiment`` call whose output directory is kept under --out, so
any cell can be re-scored later with ``iecache eval``.

    python scripts/run_grid.py --config configs/live.example.yaml \
        --dataset data/synthetic/qa.jsonl data/synthetic/planning.jsonl \
        data/synthetic/summarization.jsonl --out runs/grid

Exit status is 0 only when every cell produced a primary-metric value.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from iecache.datasets import load_dataset
from iecache.evaluation import format_table, pct
from iecache.runner import RunConfig, load_config_file, run_experiment

log = logging.getLogger("run_grid")

ROWS = {
    "generic": {"method": "generic"},
    "cot": {"method": "cot"},
    "react": {"method": "react"},
    "iecache": {"method": "iecache"},
    "iecache-no-update": {"method": "iecache", "update_enabled": False},
}
EXTRA_ROWS = {
    "iecache-monolithic": {"method": "iecache", "monolithic": True},
    "iecache-gold-schema": {"method": "iecache", "gold_schema": "@task"},
}


def run_grid(base: dict, datasets: list[str], out: Path, rows: dict[str, dict]) -> dict:
    grid: dict = {"rows": list(rows), "columns": [], "cells": {}}
    for ds in datasets:
        col = Path(ds).stem
        grid["columns"].append(col)
        for row, overrides in rows.items():
            cell_out = out / row / col
            if overrides.get("gold_schema") == "@task" and any(t.gold_schema is None for t in load_dataset(ds)):
                grid["cells"].setdefault(row, {})[col] = {"value": None, "not_applicable": "no gold schemas"}
                continue
            config = RunConfig.from_mapping({**base, **overrides, "dataset": ds, "out": str(cell_out)})
            log.info("cell %s / %s", row, col)
            try:
                report = run_experiment(config)
            except Exception as exc:  # noqa: BLE001 - one broken cell should not hide the others
                log.error("cell %s / %s failed: %s", row, col, exc)
                grid["cells"].setdefault(row, {})[col] = {"value": None, "error": str(exc)}
                continue
            metrics = sorted(set(report["primary_metric"].values()))
            metric = metrics[0] if len(metrics) == 1 else "em"
            failed = sum(1 for it in report["per_repeat"][0]["per_item"] if it.get("error"))
            grid["cells"].setdefault(row, {})[col] = {
                "metric": metric, "value": report["aggregates"][metric], "n": report["n"],
                "repeats": report["repeats"], "aborted_items_first_repeat": failed,
            }
    return grid


def grid_table(grid: dict) -> str:
    header = ["method"] + [f"{c}" for c in grid["columns"]]
    body = []
    for row in grid["rows"]:
        cells = grid["cells"].get(row, {})
        body.append([row] + ["n/a" if cells.get(c, {}).get("not_applicable") else pct(cells.get(c, {}).get("value"))
                             for c in grid["columns"]])
    metrics = {c: next((grid["cells"][r][c].get("metric") for r in grid["rows"]
                        if grid["cells"].get(r, {}).get(c, {}).get("metric")), "?") for c in grid["columns"]}
    foot = "metric per column: " + ", ".join(f"{c}={m}" for c, m in metrics.items())
    return format_table(header, body) + "\n" + foot + "\n"


def missing_cells(grid: dict) -> list[str]:
    return [f"{r}/{c}" for r in grid["rows"] for c in grid["columns"]
            if grid["cells"].get(r, {}).get(c, {}).get("value") is None
            and not grid["cells"].get(r, {}).get(c, {}).get("not_applicable")]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--config", required=True, help="base RunConfig YAML (model, endpoint, repeats, ...)")
    ap.add_argument("--dataset", nargs="+", required=True)
    ap.add_argument("--out", default="runs/grid")
    ap.add_argument("--rows", nargs="+", choices=list(ROWS) + list(EXTRA_ROWS), help="subset of rows to run")
    ap.add_argument("--with-ablations", action="store_true", help="add monolithic and gold-schema rows")
    ap.add_argument("--repeats", type=int)
    ap.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    base = load_config_file(args.config)
    if args.repeats:
        base["repeats"] = args.repeats
    rows = dict(ROWS)
    if args.with_ablations:
        rows.update(EXTRA_ROWS)
    if args.rows:
        rows = {r: {**ROWS, **EXTRA_ROWS}[r] for r in args.rows}

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    grid = run_grid(base, args.dataset, out, rows)
    (out / "grid.json").write_text(json.dumps(grid, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    table = grid_table(grid)
    (out / "grid.txt").write_text(table, encoding="utf-8")
    print(table, end="")
    missing = missing_cells(grid)
    if missing:
        print(f"INCOMPLETE: {len(missing)} cell(s) without a value: {', '.join(missing)}")
        return 1
    print(f"COMPLETE: {len(grid['rows'])} x {len(grid['columns'])} cells reported")
    return 0


if __name__ == "__main__":
    sys.exit(main())
