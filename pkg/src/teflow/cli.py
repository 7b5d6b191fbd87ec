"""Command line interface.

Exit codes: 0 success, 2 data error, 3 config error. Errors go to stderr as
``teflow: error[data]: ...`` or ``teflow: error[config]: ...``.
"""

import argparse
import csv
import dataclasses
import hashlib
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .entropy import copula_entropy
from .errors import ConfigError, DataQualityError
from .flow import compute_indicator
from .ingest import ColumnMapping, RunConfig, align_and_fill, load_csv, write_frame_csv
from .report import analyze_frame, write_flow_csv, write_plot_csv, write_report_json
from .synth import (
    CasScenarioSpec,
    CoupledVarSpec,
    GaussianCopulaSpec,
    gen_cas_scenario,
    gen_coupled_var,
    gen_gaussian_copula,
    oracle_gaussian_mi,
    oracle_linear_te,
)
from .transfer import transfer_entropy

EXIT_OK, EXIT_DATA, EXIT_CONFIG = 0, 2, 3
EFFICIENCY = "efficiency"


def _add_overrides(p):
    p.add_argument("--k", type=int, help="nearest-neighbor count (default 3)")
    p.add_argument("--window-len", type=int, help="samples per window (default 180)")
    p.add_argument("--max-lag", type=int, help="largest lag in samples (default 36)")


def build_parser():
    parser = argparse.ArgumentParser(prog="teflow", description="Transfer-entropy flow root-cause analysis.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log null cells and progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="full TE-flow run")
    p.add_argument("--input", required=True, help="telemetry CSV")
    p.add_argument("--config", help="JSON run config; columns inferred from *_current when omitted")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--dump-lags", action="store_true", help="include per-lag TE values in the JSON report")
    p.add_argument("--workers", type=int, help="threads across (window, subsystem) cells")
    _add_overrides(p)

    p = sub.add_parser("ce", help="copula entropy among named columns")
    p.add_argument("--input", required=True)
    p.add_argument("--config")
    p.add_argument("--columns", nargs="+", required=True, help="column names ('efficiency' is derived)")
    p.add_argument("--k", type=int)

    p = sub.add_parser("te", help="transfer entropy between two columns at one lag")
    p.add_argument("--input", required=True)
    p.add_argument("--config")
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--lag", type=int, default=1)
    p.add_argument("--k", type=int)

    p = sub.add_parser("synth", help="write a synthetic dataset and ground-truth sidecar")
    p.add_argument("--kind", choices=["cas", "var", "gaussian"], default="cas")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--samples", type=int, help="sample count (var, gaussian)")
    p.add_argument("--rho", type=float, default=0.9, help="correlation (gaussian)")
    p.add_argument("--lag", type=int, default=1, help="coupling lag (var)")
    return parser


def _load_config(args):
    if args.config:
        raw = RunConfig.load(args.config)
        with open(args.config, encoding="utf-8") as fh:
            raw_dict = json.load(fh)
    else:
        raw, raw_dict = RunConfig(), {}
    overrides = {}
    for flag, key in (("k", "k"), ("window_len", "window_len"), ("max_lag", "max_lag"), ("workers", "workers")):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    cfg = raw
    if overrides:
        merged = dict(raw.to_dict(), **overrides)
        cfg = RunConfig.from_dict(merged)
    return cfg.validate(), raw_dict, overrides


def _header(path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            line = fh.readline()
    except OSError as exc:
        raise DataQualityError(f"{path}: {exc.strerror or exc}") from None
    return [h.strip() for h in next(csv.reader([line]))] if line.strip() else []


def _mapping(cfg, path):
    if cfg.columns is not None:
        return cfg
    header = _header(path)
    return dataclasses.replace(cfg, columns=ColumnMapping.infer(header))


def cmd_analyze(args):
    cfg, raw_config, overrides = _load_config(args)
    cfg = _mapping(cfg, args.input)
    frame = load_csv(args.input, cfg.columns)
    aligned = align_and_fill(frame, cfg, columns=cfg.columns.data_columns)
    result = analyze_frame(aligned, cfg)

    os.makedirs(args.out, exist_ok=True)
    write_flow_csv(result, os.path.join(args.out, "te_flow.csv"))
    write_plot_csv(result, os.path.join(args.out, "te_flow_long.csv"), aligned.timestamps)
    with open(args.input, "rb") as fh:
        input_sha = hashlib.sha256(fh.read()).hexdigest()
    extra = {
        "effective_config": cfg.to_dict(),
        "overrides": overrides,
        "input": {
            "path": os.path.basename(args.input),
            "sha256": input_sha,
            "rows": frame.n_rows,
            "missing_counts": frame.missing_counts,
            "grid_samples": aligned.n_samples,
            "filled_counts": {c: int(m.sum()) for c, m in aligned.filled.items()},
            "gaps": aligned.gaps,
        },
    }
    write_report_json(result, os.path.join(args.out, "report.json"), raw_config,
                      timestamps=aligned.timestamps, dump_lags=args.dump_lags, extra=extra)
    n_null = sum(c.strength is None for c in result.cells)
    print(f"windows={len(result.window_bounds)} subsystems={len(result.subsystems)} null_cells={n_null} out={args.out}")
    return EXIT_OK


def _series(args, cfg, names):
    """Aligned, gap-free series for the named columns; 'efficiency' is derived."""
    header = _header(args.input)
    if not header:
        raise DataQualityError(f"{args.input}: missing header row")
    ts_col = cfg.columns.timestamp if cfg.columns is not None else "timestamp"
    raw = [n for n in names if n != EFFICIENCY or n in header]
    needs_eff = any(n == EFFICIENCY and n not in header for n in names)
    mapping = None
    if needs_eff:
        mapping = cfg.columns if cfg.columns is not None else ColumnMapping.infer(header, timestamp=ts_col)
    wanted = list(dict.fromkeys(raw + (mapping.data_columns if mapping else [])))
    for col in wanted:
        if col not in header:
            raise DataQualityError(f"{args.input}: missing column '{col}'")
    frame = load_csv(args.input, timestamp=ts_col, columns=wanted)
    aligned = align_and_fill(frame, cfg, columns=wanted)
    if not aligned.valid.all():
        g = aligned.gaps[0]
        raise DataQualityError(
            f"{args.input}: gap in '{g['column']}' at samples [{g['start']}, {g['end']}) exceeds fill limit"
        )
    out = {n: aligned.columns[n] for n in raw}
    if needs_eff:
        eff = compute_indicator(
            aligned.columns[mapping.flow],
            aligned.columns[mapping.pressure],
            [aligned.columns[c] for c in mapping.subsystems.values()],
            cfg.current_epsilon,
        )
        if not eff.valid.all():
            bad = int(np.flatnonzero(~eff.valid)[0])
            raise DataQualityError(f"{args.input}: efficiency undefined at sample {bad} (total current too small)")
        out[EFFICIENCY] = eff.values
    return out


def cmd_ce(args):
    cfg, _, _ = _load_config(args)
    series = _series(args, cfg, args.columns)
    x = np.column_stack([series[n] for n in args.columns])
    value = copula_entropy(x, cfg.knn)
    print(f"{value:.17g}")
    return EXIT_OK


def cmd_te(args):
    cfg, _, _ = _load_config(args)
    series = _series(args, cfg, [args.source, args.target])
    est = transfer_entropy(series[args.source], series[args.target], args.lag, cfg.knn)
    print(f"{est.value:.17g}")
    return EXIT_OK


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_synth(args):
    os.makedirs(args.out, exist_ok=True)
    data_path = os.path.join(args.out, f"synth_{args.kind}.csv")
    truth_path = os.path.join(args.out, f"synth_{args.kind}.truth.json")
    if args.kind == "cas":
        sc = gen_cas_scenario(CasScenarioSpec(seed=args.seed))
        write_frame_csv(data_path, sc.timestamps, sc.columns)
        truth = sc.ground_truth()
    elif args.kind == "var":
        spec = CoupledVarSpec(lag=args.lag, n_samples=args.samples or 5000, seed=args.seed)
        x, y = gen_coupled_var(spec)
        ts = 10.0 * np.arange(x.size, dtype=np.float64)
        write_frame_csv(data_path, ts, {"x": x, "y": y})
        truth = {"generator": "coupled_var", "prng": "numpy PCG64 via default_rng",
                 **dataclasses.asdict(spec), "oracle_te_x_to_y": oracle_linear_te(spec)}
    else:
        spec = GaussianCopulaSpec.bivariate(args.rho, args.samples or 1000, args.seed)
        x = gen_gaussian_copula(spec)
        ts = 10.0 * np.arange(x.shape[0], dtype=np.float64)
        write_frame_csv(data_path, ts, {"x1": x[:, 0], "x2": x[:, 1]})
        truth = {"generator": "gaussian_copula", "prng": "numpy PCG64 via default_rng",
                 "rho": args.rho, "n_samples": spec.n_samples, "seed": args.seed,
                 "oracle_mi": oracle_gaussian_mi(spec.corr)}
    _write_json(truth_path, truth)
    print(data_path)
    return EXIT_OK


COMMANDS = {"analyze": cmd_analyze, "ce": cmd_ce, "te": cmd_te, "synth": cmd_synth}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="teflow: %(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"teflow: error[config]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataQualityError as exc:
        print(f"teflow: error[data]: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
