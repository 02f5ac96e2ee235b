"""Output artifacts of a run: run.jsonl, summary.json, hist.csv, amin_trend.csv.

Floats are written with 17 significant digits so every value parses back
to the identical double.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .trainer import RunReport, summarize


def format_float(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite float {x}")
    s = format(x, ".17g")
    if "." not in s and "e" not in s:
        s += ".0"
    return s


def dumps(obj) -> str:
    """JSON text with 17-significant-digit floats; dict order is kept."""
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(dumps(v) for v in obj) + "]"
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {dumps(v)}" for k, v in obj.items()) + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def run_lines(report: RunReport) -> list[str]:
    """One batch record per step, followed by that step's group record."""
    lines = []
    for record, (step, gid, means) in zip(report.batch_records, report.group_trace):
        lines.append(dumps(record.to_json(step)))
        if gid is not None:
            lines.append(dumps({"step": step, "group": gid, "mean_delta": means}))
    return lines


def read_run_jsonl(path) -> tuple[list[dict], list[dict]]:
    records, groups = [], []
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            (groups if "group" in obj else records).append(obj)
    return records, groups


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return format_float(v)
    return str(v)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_csv_cell(v) for v in row) + "\n")


def write_outputs(out_dir, report: RunReport, config: dict, window: int, n_bins: int = 20) -> dict:
    """Write all four artifacts; returns the summary dict."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = summarize(report, window, n_bins)

    with open(out / "run.jsonl", "w") as fh:
        for line in run_lines(report):
            fh.write(line + "\n")

    verdicts = [r.verdict.value for r in report.batch_records]
    doc = {
        "config": config,
        "size_units": "examples" if config.get("source") == "toy" else "simulated units",
        "steps": len(report.batch_records),
        "truncated": report.truncated,
        "batch_stats": summary.batch_stats,
        "stops": {"fluct": verdicts.count("fluct"), "cap": verdicts.count("cap")},
        "group_counts": report.group_counts,
        "final_loss": report.loss_curve[-1] if report.loss_curve else None,
        "amin_window": window,
    }
    (out / "summary.json").write_text(dumps(doc) + "\n")

    edges, counts = summary.hist_edges, summary.hist_counts
    write_csv(
        out / "hist.csv",
        ["bin_lo", "bin_hi", "count"],
        [(edges[i], edges[i + 1], counts[i]) for i in range(len(counts))],
    )
    write_csv(out / "amin_trend.csv", ["window_start", "mean_amin"], summary.amin_windows)
    return doc
