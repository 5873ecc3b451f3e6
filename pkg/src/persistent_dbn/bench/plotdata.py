"""Aggregate benchmark CSVs into one table per plot: time vs N, time vs M, error vs W."""

from __future__ import annotations

import csv
import math
import statistics
from collections import defaultdict
from pathlib import Path

from ..errors import ParseError

TIME_COLUMNS = ["algorithm", "kind", "n", "m", "window", "count", "mean_wall_nanos", "sd_wall_nanos",
                "mean_op_count", "sd_op_count"]
ERROR_COLUMNS = ["algorithm", "kind", "n", "m", "window", "count", "mean_rms_error", "sd_rms_error"]
REQUIRED = {"kind", "n", "m", "algorithm", "window", "status", "wall_nanos", "op_count", "rms_error"}
FILES = ("time_vs_n.csv", "time_vs_m.csv", "error_vs_w.csv")


def mean_sd(values) -> tuple[float, float]:
    """Mean and sample standard deviation (0 for a single value)."""
    values = list(values)
    if not values:
        return math.nan, math.nan
    sd = statistics.stdev(values) if len(values) > 1 else 0.0
    return statistics.fmean(values), sd


def read_rows(path) -> list[dict]:
    """Raises ParseError on a missing header column or a malformed number."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return []
        missing = REQUIRED - set(reader.fieldnames)
        if missing:
            raise ParseError(1, f"missing columns {sorted(missing)}")
        rows = []
        for line, r in enumerate(reader, start=2):
            if None in r or any(v is None for v in r.values()):
                raise ParseError(line, "wrong number of fields")
            try:
                r["n"], r["m"] = int(r["n"]), int(r["m"])
                r["wall_nanos"], r["op_count"] = float(r["wall_nanos"]), float(r["op_count"])
                r["rms_error"] = float(r["rms_error"]) if r["rms_error"] != "" else None
            except ValueError as e:
                raise ParseError(line, str(e)) from None
            rows.append(r)
    return rows


def _num(x: str):
    return int(x) if x not in ("", None) else -1


def aggregate(rows):
    """``(time_rows, error_rows)`` over successful runs."""
    timing, errors = defaultdict(list), defaultdict(list)
    for r in rows:
        if r["status"] != "ok":
            continue
        timing[(r["algorithm"], r["kind"], r["n"], r["m"], r["window"])].append(r)
        if r["rms_error"] is not None:
            errors[(r["algorithm"], r["kind"], r["n"], r["m"], r["window"])].append(r["rms_error"])
    time_rows = []
    for (alg, kind, n, m, w), group in timing.items():
        mw, sw = mean_sd(g["wall_nanos"] for g in group)
        mo, so = mean_sd(g["op_count"] for g in group)
        time_rows.append({"algorithm": alg, "kind": kind, "n": n, "m": m, "window": w, "count": len(group),
                          "mean_wall_nanos": mw, "sd_wall_nanos": sw, "mean_op_count": mo, "sd_op_count": so})
    error_rows = []
    for (alg, kind, n, m, w), group in errors.items():
        me, se = mean_sd(group)
        error_rows.append({"algorithm": alg, "kind": kind, "n": n, "m": m, "window": w, "count": len(group),
                           "mean_rms_error": me, "sd_rms_error": se})
    return time_rows, error_rows


def emit_plot_data(csv_path, out_dir) -> dict[str, Path]:
    """Write time-vs-N, time-vs-M and error-vs-W tables into ``out_dir``."""
    from .runner import write_csv

    rows = read_rows(csv_path)
    time_rows, error_rows = aggregate(rows)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {name: out_dir / name for name in FILES}
    write_csv(sorted(time_rows, key=lambda r: (r["algorithm"], _num(r["window"]), r["kind"], r["m"], r["n"])),
              TIME_COLUMNS, paths["time_vs_n.csv"])
    write_csv(sorted(time_rows, key=lambda r: (r["algorithm"], _num(r["window"]), r["kind"], r["n"], r["m"])),
              TIME_COLUMNS, paths["time_vs_m.csv"])
    write_csv(sorted(error_rows, key=lambda r: (r["algorithm"], r["kind"], r["n"], r["m"], _num(r["window"]))),
              ERROR_COLUMNS, paths["error_vs_w.csv"])
    return paths
