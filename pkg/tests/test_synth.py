import math

import numpy as np
import pytest

from teflow.errors import ConfigError
from teflow.flow import compute_indicator
from teflow.synth import (
    BURN_IN,
    CasScenarioSpec,
    CoupledVarSpec,
    GaussianCopulaSpec,
    gen_cas_scenario,
    gen_coupled_var,
    gen_gaussian_copula,
    oracle_gaussian_mi,
    oracle_linear_te,
)

from oracles import gaussian_te


def test_gaussian_independent_correlation():
    x = gen_gaussian_copula(GaussianCopulaSpec.bivariate(0.0, 1000, 3))
    assert abs(np.corrcoef(x.T)[0, 1]) <= 0.07


def test_gaussian_correlated():
    x = gen_gaussian_copula(GaussianCopulaSpec.bivariate(0.9, 1000, 3))
    assert np.corrcoef(x.T)[0, 1] == pytest.approx(0.9, abs=0.03)


def test_gaussian_same_seed_identical():
    spec = GaussianCopulaSpec.bivariate(0.5, 100, 11)
    np.testing.assert_array_equal(gen_gaussian_copula(spec), gen_gaussian_copula(spec))


def test_gaussian_rejects_non_pd():
    with pytest.raises(ConfigError):
        gen_gaussian_copula(GaussianCopulaSpec(np.array([[1.0, 1.2], [1.2, 1.0]])))


def test_oracle_gaussian_mi_values():
    assert oracle_gaussian_mi(np.eye(2)) == 0.0
    assert oracle_gaussian_mi([[1, 0.9], [0.9, 1]]) == pytest.approx(0.830366, abs=1e-6)
    assert oracle_gaussian_mi(np.eye(3)) == 0.0


def test_oracle_gaussian_mi_matches_bivariate_form():
    rho = 0.37
    assert oracle_gaussian_mi([[1, rho], [rho, 1]]) == pytest.approx(-0.5 * math.log(1 - rho**2), rel=1e-12)


def test_oracle_gaussian_mi_singular():
    with pytest.raises(ConfigError):
        oracle_gaussian_mi([[1.0, 1.0], [1.0, 1.0]])


def test_coupled_var_structure():
    spec = CoupledVarSpec(a=0.3, b=0.7, sigma=0.2, lag=4, n_samples=3000, seed=8)
    x, y = gen_coupled_var(spec)
    assert x.shape == y.shape == (3000,)
    # recover the innovations by direct recursion on the kept span
    rng = np.random.default_rng(8)
    xf = rng.standard_normal(3000 + BURN_IN)
    eta = rng.standard_normal(3000 + BURN_IN)
    np.testing.assert_array_equal(x, xf[BURN_IN:])
    resid = y[4:] - 0.3 * y[:-4] - 0.7 * x[:-4]
    np.testing.assert_allclose(resid, 0.2 * eta[BURN_IN + 4:], atol=1e-12)


def test_coupled_var_validation():
    with pytest.raises(ConfigError):
        CoupledVarSpec(a=1.0)
    with pytest.raises(ConfigError):
        CoupledVarSpec(sigma=0.0)


def test_oracle_linear_te_null():
    assert abs(oracle_linear_te(CoupledVarSpec(b=0.0))) <= 0.002


def test_oracle_linear_te_equal_variances():
    assert oracle_linear_te(CoupledVarSpec(a=0.0, b=1.0, sigma=1.0)) == pytest.approx(0.5 * math.log(2), abs=0.01)


def test_oracle_linear_te_matches_closed_form():
    assert oracle_linear_te(CoupledVarSpec()) == pytest.approx(gaussian_te(0.5, 0.8, 0.1), rel=0.01)


def test_oracle_linear_te_deterministic():
    spec = CoupledVarSpec(seed=3)
    assert oracle_linear_te(spec, 200_000) == oracle_linear_te(spec, 200_000)


def test_cas_scenario_shapes_and_truth():
    spec = CasScenarioSpec(subsystems=("a", "b", "c"), drivers=("a", "c"), lags=(2, 4), segment_windows=(2, 3), window_len=50)
    sc = gen_cas_scenario(spec)
    assert sc.timestamps.size == 250
    assert set(sc.columns) == {"flow", "pressure", "a_current", "b_current", "c_current"}
    assert sc.window_drivers == ["a", "a", "c", "c", "c"]
    assert sc.window_lags == [2, 2, 4, 4, 4]
    assert np.diff(sc.timestamps).tolist() == [10.0] * 249


def test_cas_scenario_indicator_follows_latent_law():
    spec = CasScenarioSpec(segment_windows=(1, 1), window_len=400, seed=5)
    sc = gen_cas_scenario(spec)
    eff = compute_indicator(sc.flow, sc.pressure, sc.currents)
    assert eff.valid.all()
    latent = np.log(eff.values / spec.efficiency_mean) / spec.efficiency_spread
    z = {s: (sc.currents[s] - spec.current_baseline) / spec.current_noise for s in spec.subsystems}
    # first segment driven by comp1 at lag 3, second by comp2 at lag 7
    t = np.arange(10, 400)
    r1 = latent[t] - spec.a * latent[t - 3] - spec.b * z["comp1"][t - 3]
    t = np.arange(410, 800)
    r2 = latent[t] - spec.a * latent[t - 7] - spec.b * z["comp2"][t - 7]
    for resid in (r1, r2):
        assert np.std(resid) == pytest.approx(spec.sigma, rel=0.15)


def test_cas_scenario_constant_subsystem():
    sc = gen_cas_scenario(CasScenarioSpec(subsystems=("a", "b", "c"), drivers=("a", "b"), constant_subsystems=("c",)))
    assert np.ptp(sc.currents["c"]) == 0


def test_cas_scenario_same_seed_identical(tmp_path):
    from teflow.ingest import write_frame_csv

    paths = []
    for i in range(2):
        sc = gen_cas_scenario(CasScenarioSpec(seed=42))
        p = tmp_path / f"f{i}.csv"
        write_frame_csv(p, sc.timestamps, sc.columns)
        paths.append(p)
    assert paths[0].read_bytes() == paths[1].read_bytes()


@pytest.mark.parametrize("kwargs", [
    dict(drivers=("zzz",), lags=(1,), segment_windows=(1,)),
    dict(segment_windows=(0, 1)),
    dict(lags=(1,)),
    dict(subsystems=()),
])
def test_cas_scenario_validation(kwargs):
    with pytest.raises(ConfigError):
        CasScenarioSpec(**kwargs)
