"""Synthetic data with known ground truth.

Random streams
--------------
Every generator seeds a single ``numpy.random.Generator`` backed by PCG64
(``numpy.random.default_rng(seed)``) and draws from it in a fixed order,
documented on each function. Normal draws use ``Generator.standard_normal``
(ziggurat). Given the same numpy release family the outputs are identical
across platforms.

The oracles here never call into the estimation code; they exist to check it.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .errors import ConfigError

__all__ = [
    "GaussianCopulaSpec",
    "CoupledVarSpec",
    "CasScenarioSpec",
    "CasScenario",
    "gen_gaussian_copula",
    "oracle_gaussian_mi",
    "gen_coupled_var",
    "oracle_linear_te",
    "gen_cas_scenario",
]

BURN_IN = 1000


def _check_corr(corr):
    corr = np.asarray(corr, dtype=np.float64)
    if corr.ndim != 2 or corr.shape[0] != corr.shape[1] or corr.shape[0] < 1:
        raise ConfigError(f"correlation matrix must be square, got shape {corr.shape}")
    if not np.array_equal(corr, corr.T):
        raise ConfigError("correlation matrix must be symmetric")
    if not np.all(np.diag(corr) == 1.0):
        raise ConfigError("correlation matrix must have a unit diagonal")
    try:
        chol = np.linalg.cholesky(corr)
    except np.linalg.LinAlgError:
        raise ConfigError("correlation matrix is not positive definite") from None
    return corr, chol


@dataclass(frozen=True)
class GaussianCopulaSpec:
    corr: np.ndarray
    n_samples: int = 1000
    seed: int = 0

    @classmethod
    def bivariate(cls, rho, n_samples=1000, seed=0):
        return cls(np.array([[1.0, rho], [rho, 1.0]]), n_samples, seed)


def gen_gaussian_copula(spec):
    """Draw ``n_samples`` rows from N(0, corr).

    Stream: one ``standard_normal((n_samples, d))`` block, multiplied by the
    transposed lower Cholesky factor.
    """
    _, chol = _check_corr(spec.corr)
    if spec.n_samples < 1:
        raise ConfigError("n_samples must be positive")
    rng = np.random.default_rng(spec.seed)
    z = rng.standard_normal((spec.n_samples, chol.shape[0]))
    return z @ chol.T


def oracle_gaussian_mi(corr):
    """Closed-form Gaussian mutual information ``-0.5 * log(det corr)`` in nats."""
    corr = np.asarray(corr, dtype=np.float64)
    sign, logdet = np.linalg.slogdet(corr)
    if sign <= 0 or not np.isfinite(logdet):
        raise ConfigError("correlation matrix is singular")
    _check_corr(corr)
    return float(-0.5 * logdet)


@dataclass(frozen=True)
class CoupledVarSpec:
    """``y[t] = a*y[t-lag] + b*x[t-lag] + sigma*eta[t]`` with white ``x``."""

    a: float = 0.5
    b: float = 0.8
    sigma: float = 0.1
    lag: int = 1
    n_samples: int = 5000
    seed: int = 0

    def __post_init__(self):
        if not abs(self.a) < 1:
            raise ConfigError(f"|a| must be below 1 for stationarity, got {self.a}")
        if not self.sigma > 0:
            raise ConfigError(f"sigma must be positive, got {self.sigma}")
        if self.lag < 1:
            raise ConfigError(f"lag must be positive, got {self.lag}")
        if self.n_samples < 1:
            raise ConfigError("n_samples must be positive")


def gen_coupled_var(spec):
    """Simulate the coupled pair, returning ``(x, y)``.

    Stream: ``x`` as ``standard_normal(n + BURN_IN)``, then ``eta`` likewise.
    The first ``BURN_IN`` samples are discarded.
    """
    n = spec.n_samples + BURN_IN
    rng = np.random.default_rng(spec.seed)
    x = rng.standard_normal(n)
    eta = rng.standard_normal(n)
    drive = spec.sigma * eta
    drive[spec.lag:] += spec.b * x[:-spec.lag]
    denom = np.zeros(spec.lag + 1)
    denom[0] = 1.0
    denom[-1] = -spec.a
    y = lfilter([1.0], denom, drive)
    return x[BURN_IN:], y[BURN_IN:]


def oracle_linear_te(spec, n_samples=1_000_000):
    """Linear-Gaussian transfer entropy from a long simulation.

    Fits least squares of ``y[t]`` on ``(1, y[t-lag])`` and on
    ``(1, y[t-lag], x[t-lag])`` and returns ``0.5 * log(RSS_reduced / RSS_full)``.
    """
    long_spec = CoupledVarSpec(spec.a, spec.b, spec.sigma, spec.lag, n_samples, spec.seed)
    x, y = gen_coupled_var(long_spec)
    lag = spec.lag
    target = y[lag:]
    ones = np.ones_like(target)
    reduced = np.column_stack([ones, y[:-lag]])
    full = np.column_stack([ones, y[:-lag], x[:-lag]])

    def rss(design):
        coef, *_ = np.linalg.lstsq(design, target, rcond=None)
        resid = target - design @ coef
        return float(resid @ resid)

    return 0.5 * float(np.log(rss(reduced) / rss(full)))


@dataclass(frozen=True)
class CasScenarioSpec:
    """A compressed-air plant stand-in with one causal driver per segment.

    Within segment ``g`` the latent efficiency state follows
    ``m[t] = a*m[t-lag_g] + b*z_driver[t-lag_g] + sigma*eta[t]`` where ``z``
    is the standardized current fluctuation of the segment's driver. Other
    currents are independent noise around their baseline.
    """

    subsystems: tuple = ("comp1", "comp2")
    drivers: tuple = ("comp1", "comp2")
    lags: tuple = (3, 7)
    segment_windows: tuple = (5, 5)
    window_len: int = 180
    a: float = 0.5
    b: float = 0.8
    sigma: float = 0.3
    current_baseline: float = 120.0
    current_noise: float = 6.0
    pressure_mean: float = 7.0
    pressure_noise: float = 0.05
    efficiency_mean: float = 0.06
    efficiency_spread: float = 0.1
    constant_subsystems: tuple = ()
    sample_period: float = 10.0
    start_time: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if len(self.subsystems) < 1 or len(set(self.subsystems)) != len(self.subsystems):
            raise ConfigError("subsystems must be non-empty and distinct")
        n_seg = len(self.drivers)
        if n_seg < 1 or len(self.lags) != n_seg or len(self.segment_windows) != n_seg:
            raise ConfigError("drivers, lags and segment_windows must have equal non-zero length")
        for d in self.drivers:
            if d not in self.subsystems:
                raise ConfigError(f"driver {d!r} is not a subsystem")
        for c in self.constant_subsystems:
            if c not in self.subsystems:
                raise ConfigError(f"constant subsystem {c!r} is not a subsystem")
        if any(w < 1 for w in self.segment_windows):
            raise ConfigError("segment lengths must be at least one window")
        if any(l < 1 for l in self.lags):
            raise ConfigError("coupling lags must be positive")
        if self.window_len < 1:
            raise ConfigError("window_len must be positive")
        if not abs(self.a) < 1:
            raise ConfigError("|a| must be below 1")
        if not (self.sigma > 0 and self.current_noise > 0 and self.pressure_noise >= 0):
            raise ConfigError("noise levels must be positive")
        if self.current_baseline - 8 * self.current_noise <= 0:
            raise ConfigError("current baseline too close to zero for the noise level")

    @property
    def n_samples(self):
        return sum(self.segment_windows) * self.window_len


@dataclass
class CasScenario:
    """Generated telemetry plus per-window ground truth."""

    timestamps: np.ndarray
    columns: dict
    current_columns: dict
    window_drivers: list
    window_lags: list
    spec: CasScenarioSpec = field(repr=False)

    @property
    def flow(self):
        return self.columns["flow"]

    @property
    def pressure(self):
        return self.columns["pressure"]

    @property
    def currents(self):
        return {name: self.columns[col] for name, col in self.current_columns.items()}

    def ground_truth(self):
        return {
            "generator": "cas_scenario",
            "prng": "numpy PCG64 via default_rng",
            "seed": self.spec.seed,
            "window_len": self.spec.window_len,
            "subsystems": list(self.spec.subsystems),
            "window_drivers": list(self.window_drivers),
            "window_lags": list(self.window_lags),
        }


def gen_cas_scenario(spec):
    """Generate flow, pressure and per-subsystem currents.

    Stream order: per-subsystem current noise ``standard_normal((S, n + BURN_IN))``,
    then latent noise ``standard_normal(n + BURN_IN)``, then pressure noise
    ``standard_normal(n)``. The burn-in runs under the first segment's driver.
    """
    n = spec.n_samples
    total = n + BURN_IN
    rng = np.random.default_rng(spec.seed)
    z = rng.standard_normal((len(spec.subsystems), total))
    eta = rng.standard_normal(total)
    nu = rng.standard_normal(n)

    driver_idx = np.empty(total, dtype=np.int64)
    lag_at = np.empty(total, dtype=np.int64)
    driver_idx[:BURN_IN] = spec.subsystems.index(spec.drivers[0])
    lag_at[:BURN_IN] = spec.lags[0]
    pos = BURN_IN
    for drv, lag, n_win in zip(spec.drivers, spec.lags, spec.segment_windows):
        end = pos + n_win * spec.window_len
        driver_idx[pos:end] = spec.subsystems.index(drv)
        lag_at[pos:end] = lag
        pos = end

    latent = np.zeros(total)
    for t in range(total):
        lag = lag_at[t]
        value = spec.sigma * eta[t]
        if t >= lag:
            value += spec.a * latent[t - lag] + spec.b * z[driver_idx[t], t - lag]
        latent[t] = value
    latent = latent[BURN_IN:]
    z = z[:, BURN_IN:]

    currents = {}
    for i, name in enumerate(spec.subsystems):
        if name in spec.constant_subsystems:
            currents[name] = np.full(n, spec.current_baseline)
        else:
            currents[name] = spec.current_baseline + spec.current_noise * z[i]
    total_current = np.sum([currents[s] for s in spec.subsystems], axis=0)
    efficiency = spec.efficiency_mean * np.exp(spec.efficiency_spread * latent)
    pressure = spec.pressure_mean + spec.pressure_noise * nu
    flow = efficiency * total_current / pressure

    columns = {"flow": flow, "pressure": pressure}
    current_columns = {}
    for name in spec.subsystems:
        col = f"{name}_current"
        columns[col] = currents[name]
        current_columns[name] = col

    window_drivers, window_lags = [], []
    for drv, lag, n_win in zip(spec.drivers, spec.lags, spec.segment_windows):
        window_drivers += [drv] * n_win
        window_lags += [lag] * n_win
    timestamps = spec.start_time + spec.sample_period * np.arange(n, dtype=np.float64)
    return CasScenario(timestamps, columns, current_columns, window_drivers, window_lags, spec)
