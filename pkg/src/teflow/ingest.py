"""Telemetry CSV ingestion, grid alignment and run configuration."""

import csv
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .entropy import KnnConfig
from .errors import ConfigError, DataQualityError, EmptyAnalysisError
from .flow import DEFAULT_CURRENT_EPSILON, LagSpec, WindowSpec, check_specs

__all__ = [
    "ColumnMapping",
    "RunConfig",
    "TelemetryFrame",
    "AlignedFrame",
    "parse_timestamp",
    "load_csv",
    "align_and_fill",
    "write_frame_csv",
]

MISSING_TOKENS = frozenset({"", "na", "nan", "null", "none"})


@dataclass(frozen=True)
class ColumnMapping:
    """Which CSV columns hold the timestamp, flow, pressure and subsystem currents."""

    subsystems: dict
    timestamp: str = "timestamp"
    flow: str = "flow"
    pressure: str = "pressure"

    def __post_init__(self):
        if not self.subsystems:
            raise ConfigError("column mapping needs at least one subsystem")
        cols = self.columns
        dupes = sorted({c for c in cols if cols.count(c) > 1})
        if dupes:
            raise ConfigError(f"column mapping reuses columns: {', '.join(dupes)}")

    @property
    def columns(self):
        return [self.timestamp, self.flow, self.pressure, *self.subsystems.values()]

    @property
    def data_columns(self):
        return self.columns[1:]

    @classmethod
    def infer(cls, header, timestamp="timestamp", flow="flow", pressure="pressure"):
        """Default mapping: every ``<name>_current`` column is subsystem ``<name>``."""
        subs = {c[: -len("_current")]: c for c in header if c.endswith("_current") and c != "_current"}
        if not subs:
            raise ConfigError("no '<name>_current' columns found to infer subsystems; supply a config")
        return cls(subsystems=subs, timestamp=timestamp, flow=flow, pressure=pressure)

    def to_dict(self):
        return {
            "timestamp": self.timestamp,
            "flow": self.flow,
            "pressure": self.pressure,
            "subsystems": dict(self.subsystems),
        }


def _positive(d, key, default, kind):
    value = d.get(key, default)
    if kind is int:
        ok = isinstance(value, int) and not isinstance(value, bool) and value >= 1
    else:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value) and value > 0
    if not ok:
        raise ConfigError(f"{key} must be a positive {kind.__name__}, got {value!r}")
    return value


@dataclass(frozen=True)
class RunConfig:
    columns: ColumnMapping = None
    window: WindowSpec = WindowSpec()
    lags: LagSpec = LagSpec()
    knn: KnnConfig = KnnConfig()
    sample_period: float = 10.0
    fill_limit: int = 3
    current_epsilon: float = DEFAULT_CURRENT_EPSILON
    workers: int = 1

    def validate(self):
        check_specs(self.window, self.lags, self.knn)
        if not (self.sample_period > 0 and math.isfinite(self.sample_period)):
            raise ConfigError(f"sample_period must be positive, got {self.sample_period!r}")
        if self.fill_limit < 0:
            raise ConfigError(f"fill_limit must be non-negative, got {self.fill_limit!r}")
        if not self.current_epsilon > 0:
            raise ConfigError(f"current_epsilon must be positive, got {self.current_epsilon!r}")
        return self

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        known = {"columns", "window_len", "max_lag", "k", "distance_floor", "sample_period",
                 "fill_limit", "current_epsilon", "workers"}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        columns = None
        if "columns" in d:
            c = d["columns"]
            if not isinstance(c, dict) or not isinstance(c.get("subsystems"), dict):
                raise ConfigError("columns must be an object with a 'subsystems' object")
            extra = sorted(set(c) - {"timestamp", "flow", "pressure", "subsystems"})
            if extra:
                raise ConfigError(f"unknown columns keys: {', '.join(extra)}")
            columns = ColumnMapping(
                subsystems=dict(c["subsystems"]),
                timestamp=c.get("timestamp", "timestamp"),
                flow=c.get("flow", "flow"),
                pressure=c.get("pressure", "pressure"),
            )
        fill_limit = d.get("fill_limit", 3)
        if not isinstance(fill_limit, int) or isinstance(fill_limit, bool) or fill_limit < 0:
            raise ConfigError(f"fill_limit must be a non-negative int, got {fill_limit!r}")
        try:
            knn = KnnConfig(k=_positive(d, "k", 3, int),
                            distance_floor=_positive(d, "distance_floor", 1e-12, float))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        cfg = cls(
            columns=columns,
            window=WindowSpec(_positive(d, "window_len", 180, int)),
            lags=LagSpec(_positive(d, "max_lag", 36, int)),
            knn=knn,
            sample_period=float(_positive(d, "sample_period", 10.0, float)),
            fill_limit=fill_limit,
            current_epsilon=float(_positive(d, "current_epsilon", DEFAULT_CURRENT_EPSILON, float)),
            workers=_positive(d, "workers", 1, int),
        )
        return cfg.validate()

    @classmethod
    def load(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from None
        except OSError as exc:
            raise ConfigError(f"{path}: {exc.strerror or exc}") from None
        return cls.from_dict(raw)

    def to_dict(self):
        d = {
            "window_len": self.window.window_len,
            "max_lag": self.lags.max_lag,
            "k": self.knn.k,
            "distance_floor": self.knn.distance_floor,
            "sample_period": self.sample_period,
            "fill_limit": self.fill_limit,
            "current_epsilon": self.current_epsilon,
            "workers": self.workers,
        }
        if self.columns is not None:
            d["columns"] = self.columns.to_dict()
        return d


def parse_timestamp(text):
    """Seconds since the Unix epoch from epoch seconds or an ISO-8601 string.

    Naive ISO timestamps are taken as UTC.
    """
    s = text.strip()
    try:
        value = float(s)
    except ValueError:
        pass
    else:
        if not math.isfinite(value):
            raise ValueError(f"non-finite timestamp {text!r}")
        return value
    if s.endswith(("Z", "z")):
        s = s[:-1] + "+00:00"
    dt = datetime.fromisoformat(s)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


@dataclass
class TelemetryFrame:
    """Time-sorted raw telemetry. Missing cells are ``nan``."""

    timestamps: np.ndarray
    columns: dict
    missing_counts: dict

    @property
    def n_rows(self):
        return self.timestamps.size


def _parse_float(cell):
    if cell.strip().lower() in MISSING_TOKENS:
        return math.nan
    value = float(cell)
    if not math.isfinite(value):
        raise ValueError("non-finite")
    return value


def load_csv(path, mapping=None, timestamp="timestamp", columns=None):
    """Read a telemetry CSV.

    Only the columns named by ``mapping`` (or by ``columns``) are parsed;
    with neither, every non-timestamp column is. Blank or ``NA`` cells become ``nan`` and are counted in
    ``missing_counts``. Rows are sorted by time; duplicate timestamps are
    rejected.
    """
    ts_col = mapping.timestamp if mapping is not None else timestamp
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataQualityError(f"{path}: {exc.strerror or exc}") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise DataQualityError(f"{path}: missing header row")
        header = [h.strip() for h in header]
        if ts_col not in header:
            raise DataQualityError(f"{path}: missing timestamp column '{ts_col}'")
        if mapping is not None or columns is not None:
            wanted = list(mapping.data_columns if mapping is not None else columns)
            for col in wanted:
                if col not in header:
                    raise DataQualityError(f"{path}: missing column '{col}'")
        else:
            wanted = [h for h in header if h != ts_col]
        index = {h: i for i, h in enumerate(header)}
        stamps, values = [], {c: [] for c in wanted}
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataQualityError(
                    f"{path}: line {line_no}: expected {len(header)} fields, got {len(row)}"
                )
            try:
                stamps.append(parse_timestamp(row[index[ts_col]]))
            except ValueError:
                raise DataQualityError(
                    f"{path}: line {line_no}: unparseable timestamp {row[index[ts_col]]!r}"
                ) from None
            for col in wanted:
                cell = row[index[col]]
                try:
                    values[col].append(_parse_float(cell))
                except ValueError:
                    raise DataQualityError(
                        f"{path}: line {line_no}: unparseable value {cell!r} in column '{col}'"
                    ) from None

    ts = np.asarray(stamps, dtype=np.float64)
    order = np.argsort(ts, kind="stable")
    ts = ts[order]
    dup = np.flatnonzero(np.diff(ts) == 0)
    if dup.size:
        raise DataQualityError(f"{path}: duplicate timestamp {ts[dup[0]]!r}")
    columns = {c: np.asarray(v, dtype=np.float64)[order] for c, v in values.items()}
    missing = {c: int(np.isnan(v).sum()) for c, v in columns.items()}
    return TelemetryFrame(timestamps=ts, columns=columns, missing_counts=missing)


@dataclass
class AlignedFrame:
    """Telemetry on a fixed time grid.

    ``filled`` marks forward-filled samples per column; ``valid`` is False at
    samples that remain missing because the gap exceeded the fill limit.
    """

    timestamps: np.ndarray
    columns: dict
    filled: dict
    valid: np.ndarray
    sample_period: float
    gaps: list = field(default_factory=list)

    @property
    def n_samples(self):
        return self.timestamps.size

    def invalid_windows(self, spec):
        """Indices of complete windows that overlap an unfilled gap."""
        w = spec.window_len
        return [i for i in range(self.n_samples // w) if not self.valid[i * w:(i + 1) * w].all()]


def align_and_fill(frame, cfg=RunConfig(), columns=None):
    """Resample ``frame`` onto a grid of ``cfg.sample_period`` seconds.

    Each grid point takes the last observation inside its cell
    ``(t - period, t]``. Cells without an observation form gaps; gaps of at
    most ``cfg.fill_limit`` samples are forward-filled, longer ones (and
    leading ones) stay ``nan`` and clear ``valid``.
    """
    if frame.n_rows == 0:
        raise EmptyAnalysisError("telemetry frame has no rows")
    period = float(cfg.sample_period)
    names = list(columns) if columns is not None else list(frame.columns)
    t0 = frame.timestamps[0]
    tol = 1e-6 * period
    n = int(math.floor((frame.timestamps[-1] - t0) / period + 1e-6)) + 1
    grid = t0 + period * np.arange(n, dtype=np.float64)

    out, filled, gaps = {}, {}, []
    valid = np.ones(n, dtype=bool)
    for name in names:
        raw = frame.columns[name]
        keep = ~np.isnan(raw)
        obs_t, obs_v = frame.timestamps[keep], raw[keep]
        idx = np.searchsorted(obs_t, grid + tol, side="right") - 1
        fresh = idx >= 0
        fresh[fresh] = obs_t[idx[fresh]] > grid[fresh] - period + tol
        col = np.full(n, np.nan)
        col[fresh] = obs_v[idx[fresh]]
        was_filled = np.zeros(n, dtype=bool)

        # runs of consecutive stale grid points
        stale = (~fresh).astype(np.int8)
        edges = np.flatnonzero(np.diff(np.concatenate([[0], stale, [0]])))
        for start, end in zip(edges[::2], edges[1::2]):
            length = end - start
            if start > 0 and length <= cfg.fill_limit:
                col[start:end] = col[start - 1]
                was_filled[start:end] = True
            else:
                valid[start:end] = False
                gaps.append({"column": name, "start": int(start), "end": int(end)})
        out[name] = col
        filled[name] = was_filled
    return AlignedFrame(timestamps=grid, columns=out, filled=filled, valid=valid,
                        sample_period=period, gaps=gaps)


def _fmt(value):
    return format(float(value), ".17g")


def write_frame_csv(path, timestamps, columns, timestamp="timestamp"):
    """Write telemetry in the schema ``load_csv`` reads; ``nan`` becomes a blank cell."""
    names = list(columns)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([timestamp, *names])
        for i, t in enumerate(timestamps):
            row = [_fmt(t)]
            for name in names:
                v = columns[name][i]
                row.append("" if math.isnan(v) else _fmt(v))
            writer.writerow(row)
