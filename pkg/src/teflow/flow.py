"""Windowed transfer-entropy flow from subsystem currents to plant efficiency.

The series is cut into non-overlapping windows. Inside each window the
transfer entropy from every subsystem current to the per-sample efficiency
indicator is estimated at lags ``1..max_lag``; the maximum over lags is the
subsystem's causal strength for that window.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .entropy import KnnConfig
from .errors import ConfigError, DataQualityError, DegenerateSeriesError, EmptyAnalysisError
from .transfer import TeEstimate, transfer_entropy

log = logging.getLogger(__name__)

__all__ = [
    "WindowSpec",
    "LagSpec",
    "EfficiencySeries",
    "FlowCell",
    "TeFlowResult",
    "compute_indicator",
    "window_partition",
    "max_over_lags",
    "check_specs",
    "te_flow",
]

DEFAULT_CURRENT_EPSILON = 1e-9


@dataclass(frozen=True)
class WindowSpec:
    """Non-overlapping consecutive windows; a trailing partial window is dropped."""

    window_len: int = 180


@dataclass(frozen=True)
class LagSpec:
    max_lag: int = 36

    @property
    def lags(self):
        return range(1, self.max_lag + 1)


def check_specs(windows, lags, cfg):
    """Raise ConfigError unless every window supports estimation at every lag."""
    for name, value in (("window_len", windows.window_len), ("max_lag", lags.max_lag), ("k", cfg.k)):
        if isinstance(value, bool) or int(value) != value or value < 1:
            raise ConfigError(f"{name} must be a positive integer, got {value!r}")
    if windows.window_len < lags.max_lag + cfg.k + 2:
        raise ConfigError(
            f"window_len ({windows.window_len}) must be at least max_lag + k + 2 "
            f"= {lags.max_lag + cfg.k + 2}"
        )


@dataclass(frozen=True)
class EfficiencySeries:
    """Per-sample ``flow * pressure / total_current``; ``nan`` where ``valid`` is False."""

    values: np.ndarray
    valid: np.ndarray


def compute_indicator(flow, pressure, currents, current_epsilon=DEFAULT_CURRENT_EPSILON):
    """Efficiency indicator: output energy proxy over total current.

    Samples whose total current is at most ``current_epsilon``, or whose
    inputs are missing, are marked invalid.

    >>> compute_indicator([2.0], [3.0], [[1.0], [3.0]]).values.tolist()
    [1.5]
    """
    flow = np.asarray(flow, dtype=np.float64)
    pressure = np.asarray(pressure, dtype=np.float64)
    if isinstance(currents, dict):
        currents = list(currents.values())
    currents = [np.asarray(c, dtype=np.float64) for c in currents]
    if not currents:
        raise DataQualityError("at least one current series is required")
    n = flow.shape
    if flow.ndim != 1 or pressure.shape != n or any(c.shape != n for c in currents):
        raise DataQualityError("flow, pressure and current series must be 1-D and the same length")

    total = np.sum(currents, axis=0)
    output = flow * pressure
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        valid = np.isfinite(output) & np.isfinite(total) & (total > current_epsilon)
        values = np.where(valid, output / np.where(valid, total, 1.0), np.nan)
    valid &= np.isfinite(values)
    values[~valid] = np.nan
    return EfficiencySeries(values=values, valid=valid)


def window_partition(n_samples, spec=WindowSpec()):
    """Half-open ``(start, end)`` bounds of the complete windows in ``n_samples``.

    >>> window_partition(400, WindowSpec(180))
    [(0, 180), (180, 360)]
    """
    w = spec.window_len
    if w < 1:
        raise ConfigError(f"window_len must be positive, got {w}")
    if n_samples < w:
        raise EmptyAnalysisError(f"{n_samples} samples is shorter than one window of {w}")
    return [(i * w, (i + 1) * w) for i in range(n_samples // w)]


def max_over_lags(estimates):
    """Largest estimate and its lag; ties go to the smallest lag.

    Accepts :class:`TeEstimate` objects or ``(value, lag)`` pairs. Negative
    values are returned as they are.
    """
    pairs = [(e.value, e.lag) if isinstance(e, TeEstimate) else (float(e[0]), int(e[1])) for e in estimates]
    if not pairs:
        raise ValueError("max_over_lags needs at least one estimate")
    return min(pairs, key=lambda p: (-p[0], p[1]))


@dataclass(frozen=True)
class FlowCell:
    """Result for one (window, subsystem) pair.

    ``strength`` and ``argmax_lag`` are None exactly when ``reason`` is set.
    """

    window: int
    subsystem: str
    start: int
    end: int
    strength: float = None
    argmax_lag: int = None
    reason: str = None
    lag_values: tuple = None


@dataclass
class TeFlowResult:
    subsystems: tuple
    window_bounds: list
    window_indicator: list
    cells: list
    max_lag: int
    k: int
    indicator: EfficiencySeries = field(default=None, repr=False)

    def cell(self, window, subsystem):
        return self.cells[window * len(self.subsystems) + self.subsystems.index(subsystem)]

    def strengths(self):
        """``(W, S)`` float array with ``nan`` for null cells, for plotting and tests."""
        out = np.full((len(self.window_bounds), len(self.subsystems)), np.nan)
        for c in self.cells:
            if c.strength is not None:
                out[c.window, self.subsystems.index(c.subsystem)] = c.strength
        return out

    def winners(self):
        """Per window, the subsystem with the largest non-null strength, or None."""
        out = []
        for w in range(len(self.window_bounds)):
            row = [self.cells[w * len(self.subsystems) + i] for i in range(len(self.subsystems))]
            row = [c for c in row if c.strength is not None]
            out.append(max(row, key=lambda c: c.strength).subsystem if row else None)
        return out


def _evaluate_cell(job):
    w, name, start, end, source, target, window_ok, lags, cfg, keep = job
    cell = dict(window=w, subsystem=name, start=start, end=end)
    if not window_ok:
        return FlowCell(**cell, reason="invalid_indicator")
    if not np.all(np.isfinite(source)):
        return FlowCell(**cell, reason="missing_source")
    if np.ptp(source) == 0:
        return FlowCell(**cell, reason="constant_source")
    if np.ptp(target) == 0:
        return FlowCell(**cell, reason="constant_target")
    estimates = []
    for lag in lags.lags:
        try:
            estimates.append(transfer_entropy(source, target, lag, cfg))
        except DegenerateSeriesError as exc:
            return FlowCell(**cell, reason=f"constant_{exc.series}_at_lag_{lag}")
    value, best = max_over_lags(estimates)
    lag_values = tuple(e.value for e in estimates) if keep else None
    return FlowCell(**cell, strength=value, argmax_lag=best, lag_values=lag_values)


def te_flow(
    flow,
    pressure,
    currents,
    windows=WindowSpec(),
    lags=LagSpec(),
    cfg=KnnConfig(),
    valid=None,
    current_epsilon=DEFAULT_CURRENT_EPSILON,
    workers=1,
    keep_lag_values=False,
):
    """Run the TE-flow analysis.

    Parameters
    ----------
    flow, pressure : array_like, shape (T,)
        System output flow rate and pressure.
    currents : mapping of str to array_like
        Current of each subsystem, keyed by subsystem name.
    valid : array_like of bool, optional
        Extra per-sample validity mask, e.g. from gap detection during
        ingestion. A window with any invalid sample yields null cells.
    workers : int
        Threads used across (window, subsystem) cells. The result does not
        depend on this value.
    keep_lag_values : bool
        Store the per-lag TE values on each cell.

    Returns
    -------
    TeFlowResult
    """
    check_specs(windows, lags, cfg)
    names = tuple(currents)
    if not names:
        raise DataQualityError("at least one subsystem current is required")
    series = {name: np.asarray(currents[name], dtype=np.float64) for name in names}
    eff = compute_indicator(flow, pressure, [series[s] for s in names], current_epsilon)
    n = eff.values.size
    ok = eff.valid.copy()
    if valid is not None:
        valid = np.asarray(valid, dtype=bool)
        if valid.shape != ok.shape:
            raise DataQualityError("validity mask length does not match the series")
        ok &= valid
    bounds = window_partition(n, windows)

    jobs, window_indicator = [], []
    for w, (start, end) in enumerate(bounds):
        window_ok = bool(ok[start:end].all())
        e_win = eff.values[start:end]
        finite = e_win[eff.valid[start:end]]
        window_indicator.append(float(finite.mean()) if finite.size else None)
        for name in names:
            jobs.append((w, name, start, end, series[name][start:end], e_win, window_ok, lags, cfg, keep_lag_values))

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_evaluate_cell, jobs))
    else:
        cells = [_evaluate_cell(job) for job in jobs]

    for c in cells:
        if c.reason is not None:
            log.info("window %d [%d, %d) subsystem %s: null (%s)", c.window, c.start, c.end, c.subsystem, c.reason)
    return TeFlowResult(
        subsystems=names,
        window_bounds=bounds,
        window_indicator=window_indicator,
        cells=cells,
        max_lag=lags.max_lag,
        k=cfg.k,
        indicator=eff,
    )
