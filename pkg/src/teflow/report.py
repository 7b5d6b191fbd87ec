"""Serialization of TE-flow results: flow CSV, JSON report, long-format plot CSV.

Floats are written with 17 significant digits so they re-read exactly.
Output is a deterministic function of the result, so repeated runs give
byte-identical files.
"""

import csv
import hashlib
import json
import math

from .flow import te_flow

__all__ = [
    "FLOW_COLUMNS",
    "analyze_frame",
    "config_digest",
    "write_flow_csv",
    "read_flow_csv",
    "write_report_json",
    "write_plot_csv",
]

FLOW_COLUMNS = ("window_start", "window_end", "subsystem", "strength", "argmax_lag", "window_indicator")


def analyze_frame(aligned, cfg):
    """Run :func:`te_flow` on an aligned frame using ``cfg.columns``."""
    m = cfg.columns
    return te_flow(
        aligned.columns[m.flow],
        aligned.columns[m.pressure],
        {name: aligned.columns[col] for name, col in m.subsystems.items()},
        windows=cfg.window,
        lags=cfg.lags,
        cfg=cfg.knn,
        valid=aligned.valid,
        current_epsilon=cfg.current_epsilon,
        workers=cfg.workers,
        keep_lag_values=True,
    )


def _num(value):
    if value is None:
        return ""
    return format(float(value), ".17g")


def _json_num(value):
    if value is None or (isinstance(value, float) and not math.isfinite(value)):
        return None
    return value


def config_digest(config_dict):
    """SHA-256 of the canonical JSON form of a config mapping."""
    canon = json.dumps(config_dict, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def write_flow_csv(result, path):
    """One row per window and subsystem; null strengths are blank cells."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FLOW_COLUMNS)
        for c in result.cells:
            writer.writerow([
                c.start,
                c.end,
                c.subsystem,
                _num(c.strength),
                "" if c.argmax_lag is None else c.argmax_lag,
                _num(result.window_indicator[c.window]),
            ])


def read_flow_csv(path):
    """Parse a flow CSV back into a list of dicts with typed values."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            rows.append({
                "window_start": int(rec["window_start"]),
                "window_end": int(rec["window_end"]),
                "subsystem": rec["subsystem"],
                "strength": float(rec["strength"]) if rec["strength"] else None,
                "argmax_lag": int(rec["argmax_lag"]) if rec["argmax_lag"] else None,
                "window_indicator": float(rec["window_indicator"]) if rec["window_indicator"] else None,
            })
    return rows


def write_report_json(result, path, config, timestamps=None, dump_lags=False, extra=None):
    """JSON report with the config echo, its digest and per-window details."""
    windows = []
    for w, (start, end) in enumerate(result.window_bounds):
        entry = {
            "index": w,
            "start": start,
            "end": end,
            "indicator_mean": _json_num(result.window_indicator[w]),
            "cells": {},
        }
        if timestamps is not None:
            entry["start_time"] = float(timestamps[start])
            entry["end_time"] = float(timestamps[end - 1])
        for name in result.subsystems:
            c = result.cell(w, name)
            cell = {"strength": c.strength, "argmax_lag": c.argmax_lag, "reason": c.reason}
            if dump_lags:
                cell["te_by_lag"] = list(c.lag_values) if c.lag_values is not None else None
            entry["cells"][name] = cell
        windows.append(entry)
    report = {
        "config": config,
        "config_sha256": config_digest(config),
        "units": "nats",
        "subsystems": list(result.subsystems),
        "lags": list(range(1, result.max_lag + 1)),
        "windows": windows,
    }
    if extra:
        report.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")
    return report


def write_plot_csv(result, path, timestamps=None):
    """Long format: one row per window and variable (indicator or a subsystem strength)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["window", "window_start", "window_end", "time", "variable", "value"])
        for w, (start, end) in enumerate(result.window_bounds):
            t = "" if timestamps is None else _num(timestamps[start])
            writer.writerow([w, start, end, t, "efficiency_indicator", _num(result.window_indicator[w])])
            for name in result.subsystems:
                writer.writerow([w, start, end, t, f"te_flow:{name}", _num(result.cell(w, name).strength)])
