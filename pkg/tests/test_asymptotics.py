import math

import numpy as np
import pytest
from scipy import stats

from seqmon.asymptotics import (
    ExplosiveParams,
    am_bm,
    bm_alternative_form,
    cm_dm,
    delta_measure,
    explosive_limit_probability,
    explosive_threshold,
    fa1_fb1,
    rw_time_scale,
    simulate_integrated_wiener,
    simulate_rw_functional,
    simulate_rw_limit,
)
from seqmon.dgp import (
    AR_RHO,
    BETA0_BAR,
    BETA0_D,
    DELTA_BAR_ALT,
    GARCH_X_OMEGA,
    GARCH_X_PHI,
    GARCH_X_PSI,
    Change,
    DgpSpec,
    ErrorProcess,
    RegressorProcess,
)
from seqmon.errors import ParameterError
from seqmon.experiments import run_cell

C_GAMMA0_ALPHA05 = 2.2365


def test_change_magnitude_of_stationary_alternative():
    beta0 = BETA0_BAR + (BETA0_D,)
    delta = DELTA_BAR_ALT + (0.60,)
    mag = delta_measure(beta0, delta)
    assert mag.ey_A == pytest.approx(0.1)
    assert mag.delta == pytest.approx(-0.055)
    np.testing.assert_allclose(mag.c_A, [1, 0, 0, 0, 0, 0.1])


def test_change_magnitude_with_regressor_means():
    mag = delta_measure([0.0, 1.0, 0.5], [0.0, 2.0, 0.5], exog_means=[3.0])
    # E y_A = 3 * 2 / 0.5
    assert mag.ey_A == pytest.approx(12.0)
    assert mag.delta == pytest.approx(-3.0)


@pytest.mark.parametrize("delta", [[0.0, 1.0], [0.0, -1.2]])
def test_change_magnitude_needs_stationary_alternative(delta):
    with pytest.raises(ParameterError):
        delta_measure([0.0, 0.5], delta)


def test_stationary_centring_and_scale():
    a_M, b_M = am_bm(0.5, 10_000, C_GAMMA0_ALPHA05, 1.0, 0.0)
    assert a_M == pytest.approx(447.3)
    assert b_M == pytest.approx(math.sqrt(447.3) / 0.5)
    assert b_M == pytest.approx(42.30, abs=0.01)


def test_centring_depends_on_the_size_of_the_change_only():
    assert am_bm(-0.5, 500, 2.0, 1.3, 0.25) == pytest.approx(am_bm(0.5, 500, 2.0, 1.3, 0.25))


@pytest.mark.parametrize("gamma", [0.0, 0.15, 0.25, 0.45, 0.49])
def test_centring_growth_in_M(gamma):
    a1, _ = am_bm(0.3, 100, 2.5, 1.0, gamma)
    a2, _ = am_bm(0.3, 400, 2.5, 1.0, gamma)
    assert a2 / a1 == pytest.approx(4.0 ** ((0.5 - gamma) / (1.0 - gamma)))


@pytest.mark.parametrize("gamma", [0.0, 0.25, 0.45])
@pytest.mark.parametrize("delta,sigma", [(0.5, 1.0), (-0.055, 0.8), (2.0, 3.0)])
def test_scale_forms_agree(gamma, delta, sigma):
    _, b_M = am_bm(delta, 300, 2.4, sigma, gamma)
    assert bm_alternative_form(delta, 300, 2.4, sigma, gamma) == pytest.approx(b_M, rel=1e-10)


def test_stationary_asymptotics_errors():
    with pytest.raises(ParameterError):
        am_bm(0.0, 100, 2.0, 1.0, 0.0)
    with pytest.raises(ParameterError):
        am_bm(0.5, 100, 2.0, 1.0, 0.5)
    with pytest.raises(ParameterError):
        am_bm(0.5, 0, 2.0, 1.0, 0.0)


def test_random_walk_change_sizes_analytic():
    proc = RegressorProcess.ar1([0.15])
    params = fa1_fb1([0.3, 1.0], [0.1, 0.0], proc, sigma_sq=1.0)
    assert params.fa1 == pytest.approx(0.2)
    assert params.fb1_sq == pytest.approx(1.0 + 1.0 / 0.85 ** 2)
    assert params.fb1 == pytest.approx(math.sqrt(params.fb1_sq))


def test_shared_ar_innovations_add_up_before_squaring():
    proc = RegressorProcess.ar1([0.5, 0.5], shared_innovations=True)
    params = fa1_fb1([0.0, 1.0, 1.0], [0.0, 0.0, 0.0], proc, sigma_sq=0.0)
    assert params.fb1_sq == pytest.approx(16.0)
    independent = fa1_fb1([0.0, 1.0, 1.0], [0.0, 0.0, 0.0],
                          RegressorProcess.ar1([0.5, 0.5]), sigma_sq=0.0)
    assert independent.fb1_sq == pytest.approx(8.0)


def test_independent_garch_long_run_variance_is_the_variance():
    proc = RegressorProcess.garch(GARCH_X_OMEGA, GARCH_X_PHI, GARCH_X_PSI)
    w = np.array([1.6, 0.75, 0.55, 1.2])
    params = fa1_fb1(DELTA_BAR_ALT, BETA0_BAR, proc, sigma_sq=1.0)
    assert params.fb1_sq == pytest.approx(1.0 + float(w ** 2 @ proc.variances))
    assert params.fa1 == pytest.approx(0.02)


def test_shared_garch_needs_simulation():
    proc = RegressorProcess.garch(GARCH_X_OMEGA, GARCH_X_PHI, GARCH_X_PSI, shared_innovations=True)
    with pytest.raises(ParameterError):
        fa1_fb1(DELTA_BAR_ALT, BETA0_BAR, proc, sigma_sq=1.0)
    params = fa1_fb1(DELTA_BAR_ALT, BETA0_BAR, proc, sigma_sq=1.0,
                     estimation="simulation", n=50_000, seed=1)
    assert params.fb1_sq > 1.0


def test_simulated_long_run_variance_matches_the_closed_form():
    proc = RegressorProcess.ar1([0.15])
    analytic = fa1_fb1([0.0, 1.0], [0.0, 0.0], proc, sigma_sq=0.0)
    simulated = fa1_fb1([0.0, 1.0], [0.0, 0.0], proc, sigma_sq=0.0,
                        estimation="simulation", n=200_000, seed=3)
    assert analytic.fb1_sq == pytest.approx(1.0 / 0.85 ** 2)
    assert simulated.fb1_sq == pytest.approx(analytic.fb1_sq, rel=0.05)


def test_random_walk_change_size_errors():
    proc = RegressorProcess.ar1([0.15])
    with pytest.raises(ParameterError):
        fa1_fb1([0.0, 1.0, 2.0], [0.0, 0.0], proc, 1.0)
    with pytest.raises(ParameterError):
        fa1_fb1([0.0, 1.0], [0.0, 0.0], proc, 1.0, estimation="bootstrap")


def test_random_walk_centring_and_scale():
    M, c, sigma, beta = 10_000, C_GAMMA0_ALPHA05, 1.0, 0.25
    c_M, d_M = cm_dm(1.0, 1.0, M, c, sigma, 0.0, beta)
    assert c_M == pytest.approx(math.sqrt(2 * c / 0.75) * 10.0)
    assert c_M == pytest.approx(24.421, abs=1e-3)

    # gamma = 0 written out: d_M = (1/2)(1/sqrt 3)(c sigma/(1-beta))^{3/4} 2^{7/4} M^{3/8} / c_M
    expected = (0.5 / math.sqrt(3.0) * (c * sigma / (1 - beta)) ** 0.75
                * 2.0 ** 1.75 * M ** 0.375 / c_M)
    assert d_M == pytest.approx(expected)
    assert d_M == pytest.approx(2.0 * math.sqrt(c_M) / (2.0 * math.sqrt(3.0)))


@pytest.mark.parametrize("gamma", [0.0, 0.25, 0.45])
@pytest.mark.parametrize("fa1,fb1", [(0.5, 1.1), (2.0, 0.7), (-1.3, 3.0)])
def test_random_walk_scale_compact_form(gamma, fa1, fb1):
    c_M, d_M = cm_dm(fa1, fb1, 2_000, 2.5, 1.3, gamma, 0.25)
    # the drift term (1 - beta0_d) fa1 s^2 / 2 meets the boundary at c_M
    boundary = 2.5 * 1.3 * 2_000 ** (0.5 - gamma) * c_M ** gamma
    assert 0.75 * abs(fa1) * c_M ** 2 / 2.0 == pytest.approx(boundary, rel=1e-10)
    compact = 2.0 * fb1 * math.sqrt(c_M) / ((2.0 - gamma) * math.sqrt(3.0) * abs(fa1))
    assert d_M == pytest.approx(compact, rel=1e-10)


def test_larger_drift_stops_earlier():
    slow, _ = cm_dm(0.25, 1.0, 5_000, 2.0, 1.0, 0.0, 0.25)
    fast, _ = cm_dm(1.0, 1.0, 5_000, 2.0, 1.0, 0.0, 0.25)
    assert slow / fast == pytest.approx(2.0)


def test_random_walk_centring_growth():
    c1, _ = cm_dm(0.4, 1.2, 1_000, 2.5, 1.0, 0.0, 0.25)
    c2, _ = cm_dm(0.4, 1.2, 16_000, 2.5, 1.0, 0.0, 0.25)
    assert c2 / c1 == pytest.approx(2.0)
    assert cm_dm(-0.4, 1.2, 1_000, 2.5, 1.0, 0.3, 0.25) == \
        pytest.approx(cm_dm(0.4, 1.2, 1_000, 2.5, 1.0, 0.3, 0.25))


def test_random_walk_centring_errors():
    with pytest.raises(ParameterError):
        cm_dm(0.0, 1.0, 100, 2.0, 1.0, 0.0, 0.25)
    with pytest.raises(ParameterError):
        cm_dm(1.0, 1.0, 100, 2.0, 1.0, 0.0, 1.0)


def test_time_scale():
    assert rw_time_scale(1000, 0.0) == pytest.approx(10.0)
    assert rw_time_scale(1000, 0.49) == pytest.approx(1000 ** (0.02 / 2.02))


@pytest.mark.parametrize("x", [0.5, 1.0, 2.0])
def test_integrated_wiener_variance(x):
    sample = simulate_integrated_wiener(x, reps=20_000, grid=200, seed=11)
    assert sample.shape == (20_000,)
    assert abs(sample.mean()) < 4.0 * math.sqrt(x ** 3 / 3.0 / 20_000)
    assert sample.var() == pytest.approx(x ** 3 / 3.0, rel=0.05)


@pytest.mark.slow
@pytest.mark.parametrize("x", [0.5, 1.0, 2.0])
def test_integrated_wiener_variance_tight(x):
    sample = simulate_integrated_wiener(x, reps=100_000, grid=1_000, seed=12)
    assert sample.var() == pytest.approx(x ** 3 / 3.0, rel=0.02)


def test_integrated_wiener_is_reproducible():
    a = simulate_integrated_wiener(1.0, reps=300, grid=50, seed=4)
    b = simulate_integrated_wiener(1.0, reps=300, grid=50, seed=4)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, simulate_integrated_wiener(1.0, reps=300, grid=50, seed=5))


@pytest.mark.parametrize("gamma", [0.0, 0.25, 0.45])
def test_pure_drift_limit_is_a_step_in_c(gamma):
    x, beta, fa1, sigma = 1.5, 0.25, 0.8, 1.0
    step = (1 - beta) * fa1 * x ** (2 - gamma) / (2 * sigma)
    values = simulate_rw_functional(x, gamma, beta, 0.0, fa1, reps=5, grid=100)
    np.testing.assert_allclose(values, step * sigma)
    assert simulate_rw_limit(x, gamma, beta, 0.0, fa1, step * 0.99, sigma, reps=5, grid=100) == 1.0
    assert simulate_rw_limit(x, gamma, beta, 0.0, fa1, step * 1.01, sigma, reps=5, grid=100) == 0.0


def test_limit_probability_grows_with_x():
    probs = [simulate_rw_limit(x, 0.0, 0.25, 1.0, 0.0, 0.5, 1.0, reps=2_000, grid=100, seed=2)
             for x in (0.5, 1.0, 2.0, 4.0)]
    assert probs == sorted(probs)
    assert probs[-1] > probs[0]
    assert simulate_rw_limit(1.0, 0.0, 0.25, 1.0, 0.0, 1e6, 1.0, reps=500, grid=100) == 0.0


def test_rw_functional_errors():
    with pytest.raises(ParameterError):
        simulate_rw_functional(0.0, 0.0, 0.25, 1.0, 0.0)
    with pytest.raises(ParameterError):
        simulate_rw_functional(1.0, 0.5, 0.25, 1.0, 0.0)
    with pytest.raises(ParameterError):
        simulate_rw_functional(1.0, 0.0, 0.25, 1.0, 0.0, reps=0)


def test_explosive_threshold():
    params = ExplosiveParams(1.25, 0.25, 10)
    res = explosive_threshold(params, 200, 0.0, 0.0, C_GAMMA0_ALPHA05, 1.0)
    assert res.f_argument == pytest.approx(0.559125)
    assert res.location == pytest.approx(10 + 0.5 * math.log(200) / math.log(1.25))

    later = explosive_threshold(params, 200, 0.0, 2.0, C_GAMMA0_ALPHA05, 1.0)
    assert later.f_argument == pytest.approx(0.559125 / 1.25 ** 2)
    assert later.location == pytest.approx(res.location + 2.0)


def test_explosive_threshold_with_gamma():
    params = ExplosiveParams(1.1, 0.25, 1)
    res = explosive_threshold(params, 500, 0.45, 0.0, 3.0, 1.0)
    shift = (0.05 * math.log(500) + 0.45 * math.log(math.log(500))) / math.log(1.1)
    assert res.location == pytest.approx(1 + shift)


def test_explosive_errors():
    with pytest.raises(ParameterError):
        ExplosiveParams(1.0, 0.25, 1)
    with pytest.raises(ParameterError):
        ExplosiveParams(-0.9, 0.25, 1)
    with pytest.raises(ParameterError):
        explosive_threshold(ExplosiveParams(1.25, 0.25, 1), 2, 0.0, 0.0, 2.0, 1.0)


def test_explosive_limit_probability():
    assert explosive_limit_probability(0.0) == pytest.approx(0.5)
    assert explosive_limit_probability(0.559125) == pytest.approx(0.288, abs=1e-3)
    assert explosive_limit_probability(1.0, cdf=lambda z: min(max(z / 2.0, 0.0), 1.0)) == 0.5


@pytest.mark.parametrize("gamma", [0.0, 0.25])
def test_driftless_functional_scales_with_x(gamma):
    # same number of grid points on (0, 2] and (0, 1]
    wide = simulate_rw_functional(2.0, gamma, 0.25, 1.0, 0.0, reps=50_000, grid=200, seed=21)
    unit = simulate_rw_functional(1.0, gamma, 0.25, 1.0, 0.0, reps=50_000, grid=400, seed=22)
    scaled = unit * 2.0 ** (1.5 - gamma)
    assert stats.ks_2samp(wide, scaled).statistic < 0.02
    assert stats.ks_2samp(wide, unit).statistic > 0.2


def _intercept_world(M, delta_bar, delta_d, extra_horizon, seed):
    """Shared-innovation AR regressors, N(0,1) errors; only what ``delta_bar`` moves changes."""
    return DgpSpec(
        RegressorProcess.ar1(AR_RHO, shared_innovations=True),
        ErrorProcess.iid_normal(1.0),
        beta0_bar=(0.0,) + BETA0_BAR[1:],
        beta0_d=BETA0_D,
        change=Change(1, delta_bar, delta_d),
        M=M,
        extra_horizon=extra_horizon,
        seed=seed,
    )


@pytest.mark.slow
def test_stopping_time_is_normal_under_a_stationary_alternative():
    M, c, shift = 5_000, 0.6, 0.3
    spec = _intercept_world(M, (shift,) + BETA0_BAR[1:], BETA0_D, 800, seed=31)
    delta = delta_measure(spec.beta0, spec.delta).delta
    assert delta == pytest.approx(-shift)

    (cell,) = run_cell(spec, (0.0,), (0.05,), reps=2_000, c=c, corrected=False)
    assert cell.detections == (2_000,)
    a_M, b_M = am_bm(delta, M, c, 1.0, 0.0)
    z = (cell.taus - a_M) / b_M
    assert stats.kstest(z, "norm").statistic < 0.10


@pytest.mark.slow
def test_stopping_time_is_normal_under_a_unit_root_alternative():
    M, c, drift = 5_000, 4.0, 0.5
    spec = _intercept_world(M, (drift,) + BETA0_BAR[1:], 1.0, 300, seed=32)
    params = fa1_fb1(spec.change.delta_bar, spec.beta0_bar, spec.regressors, sigma_sq=1.0)
    assert params.fa1 == pytest.approx(drift)

    (cell,) = run_cell(spec, (0.0,), (0.05,), reps=2_000, c=c, corrected=False)
    assert cell.detections == (2_000,)
    c_M, d_M = cm_dm(params.fa1, params.fb1, M, c, 1.0, 0.0, BETA0_D)
    z = (cell.taus - c_M) / d_M
    assert stats.kstest(z, "norm").statistic < 0.15
