import numpy as np
import pytest

from seqmon.dgp import (
    BETA0_BAR,
    DELTA_BAR_ALT,
    GARCH_X_OMEGA,
    GARCH_X_PHI,
    GARCH_X_PSI,
    DgpSpec,
    ErrorProcess,
    RegressorProcess,
    gen_errors,
    gen_regressors,
    gen_response,
    generate_batch,
    make_dgp,
    simulate,
    simulate_dataset,
)
from seqmon.errors import DimensionError, ParameterError
from seqmon.stationarity import kpss_level, long_run_variance


def test_dgp_v_parameters():
    spec = make_dgp("v", 100)
    assert spec.beta0_bar == (0.02, 0.20, 0.25, 0.15, -0.20)
    assert spec.beta0_d == 0.25
    assert spec.change.delta_bar == (0.04, 1.60, 0.75, 0.55, 1.20)
    assert spec.change.delta_d == 0.60
    assert spec.d == 6
    assert spec.extra_horizon == 1000


def test_dgp_i_parameters():
    spec = make_dgp("i", 50)
    assert spec.regressors.kind == "ar1"
    assert spec.regressors.rho == (0.15, 0.20, 0.10, 0.30)
    assert not spec.regressors.shared_innovations
    assert (spec.errors.kind, spec.errors.omega, spec.errors.phi, spec.errors.psi) == \
        ("garch", 0.2, 0.3, 0.3)
    assert spec.change is None


def test_shared_and_garch_worlds():
    assert make_dgp("ii", 50).regressors.shared_innovations
    iii = make_dgp("iii", 50).regressors
    assert (iii.kind, iii.omega, iii.phi, iii.psi) == \
        ("garch", GARCH_X_OMEGA, GARCH_X_PHI, GARCH_X_PSI)
    assert make_dgp("iv", 50).regressors.shared_innovations
    assert make_dgp("iv", 50).errors.kind == "iid_normal"


def test_only_the_autoregressive_coefficient_changes_in_vii():
    spec = make_dgp("vii", 50, delta_d=0.90)
    assert spec.change.delta_bar == BETA0_BAR
    assert spec.change.delta_d == 0.90
    assert make_dgp("xi", 50, delta_d=1.25).change.delta_bar == DELTA_BAR_ALT


@pytest.mark.parametrize("dgp_id,kwargs", [
    ("vii", {}),
    ("vii", {"delta_d": 0.80}),
    ("xi", {"delta_d": 0.99}),
    ("i", {"delta_d": 0.5}),
    ("xiii", {}),
])
def test_invalid_combinations(dgp_id, kwargs):
    with pytest.raises(ParameterError):
        make_dgp(dgp_id, 50, **kwargs)


def test_process_constraints():
    with pytest.raises(ParameterError):
        RegressorProcess.ar1([0.5, 1.0])
    with pytest.raises(ParameterError):
        RegressorProcess.garch([0.1], [0.6], [0.4])
    with pytest.raises(ParameterError):
        ErrorProcess.garch(0.2, 0.5, 0.5)
    with pytest.raises(DimensionError):
        RegressorProcess.garch([0.1, 0.2], [0.1], [0.1])


def test_white_noise_regressors():
    x = gen_regressors(RegressorProcess.ar1([0.0, 0.0]), 10_000, seed=1)
    for j in range(2):
        col = x[:, j] - x[:, j].mean()
        rho1 = float(col[1:] @ col[:-1]) / float(col @ col)
        assert abs(rho1) < 0.05


def test_shared_innovations_with_equal_rho_give_identical_columns():
    x = gen_regressors(RegressorProcess.ar1([0.4] * 4, shared_innovations=True), 500, seed=2)
    for j in range(1, 4):
        np.testing.assert_array_equal(x[:, 0], x[:, j])


def test_garch_regressor_variances():
    proc = RegressorProcess.garch(GARCH_X_OMEGA, GARCH_X_PHI, GARCH_X_PSI)
    x = gen_regressors(proc, 200_000, seed=3)
    target = proc.variances
    # columns 1 and 2 have finite kurtosis; column 0 is close to the edge
    for j, tol in ((0, 0.25), (1, 0.10), (2, 0.10)):
        assert abs(x[:, j].var() / target[j] - 1.0) < tol
    # column 3 has an infinite fourth moment; only check the order of magnitude
    assert 0.3 < x[:, 3].var() / target[3] < 3.0


def test_garch_error_variance():
    e = gen_errors(ErrorProcess.garch(0.2, 0.3, 0.3), 200_000, seed=4)
    assert abs(e.var() / 0.5 - 1.0) < 0.10


def test_degenerate_garch_is_iid():
    e = gen_errors(ErrorProcess.garch(0.7, 0.0, 0.0), 100_000, seed=5)
    assert abs(e.var() / 0.7 - 1.0) < 0.03
    iid = gen_errors(ErrorProcess.iid_normal(0.7), 100_000, seed=5)
    np.testing.assert_allclose(e, iid)


def test_generation_is_deterministic():
    proc = ErrorProcess.garch(0.2, 0.3, 0.3)
    np.testing.assert_array_equal(gen_errors(proc, 300, seed=9), gen_errors(proc, 300, seed=9))
    spec = make_dgp("vi", 40, s_star=2, seed=8)
    a, b = simulate(spec, 3), simulate(spec, 3)
    np.testing.assert_array_equal(a.y, b.y)
    assert not np.array_equal(a.y, simulate(spec, 4).y)


def test_pure_noise_response():
    x = np.random.default_rng(0).standard_normal((300, 4))
    eps = np.random.default_rng(1).standard_normal(300)
    y, cp = gen_response(x, eps, np.zeros(5), 0.0, None, M=50, burn_in=100)
    np.testing.assert_allclose(y, eps[100:], rtol=0, atol=1e-15)
    assert cp is None


def test_response_mean_under_the_null():
    n, burn = 100_000, 500
    spec = make_dgp("i", 10)
    x = gen_regressors(spec.regressors, n + burn, burn, seed=10)
    e = gen_errors(spec.errors, n + burn, burn, seed=11)
    y, _ = gen_response(x, e, spec.beta0_bar, spec.beta0_d, None, M=10, burn_in=burn)
    target = spec.beta0_bar[0] / (1.0 - spec.beta0_d)
    se = np.sqrt(long_run_variance(y) / y.size)
    assert abs(y.mean() - target) < 4.0 * se


def test_change_index_and_length():
    spec = make_dgp("v", 30, s_star=4, extra_horizon=50)
    data = simulate(spec)
    assert data.y.shape == (81,) and data.x.shape == (81, 4) and data.eps.shape == (81,)
    assert data.change_index == 34


def test_change_past_the_horizon():
    spec = make_dgp("v", 30, s_star=60, extra_horizon=50)
    with pytest.raises(DimensionError):
        simulate(spec)


def test_explosive_growth():
    spec = make_dgp("xi", 50, s_star=1, delta_d=1.25, seed=12, extra_horizon=210)
    data = generate_batch(spec, 0, 1000)
    late = np.abs(data.y[:, data.change_index + 200])
    assert np.mean(late > 1e6) >= 0.99


def test_regressors_and_errors_are_independent():
    spec = make_dgp("ii", 100_000 - 1, extra_horizon=0, seed=13)
    data = simulate(spec)
    for j in range(4):
        r = np.corrcoef(data.x[:, j], data.eps)[0, 1]
        assert abs(r) < 0.03


def test_batch_rows_match_single_draws():
    spec = make_dgp("x", 40, s_star=3, delta_d=0.99, seed=14, extra_horizon=60)
    batch = generate_batch(spec, 5, 9)
    for j, r in enumerate(range(5, 9)):
        single = simulate(spec, r)
        np.testing.assert_allclose(batch.y[j], single.y, rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(batch.x[j], single.x, rtol=1e-12, atol=1e-12)


def test_null_response_passes_kpss():
    spec = make_dgp("ii", 499, extra_horizon=0, seed=15)
    data = generate_batch(spec, 0, 200)
    accepted = [not kpss_level(y).reject_1 for y in data.y]
    assert np.mean(accepted) >= 0.95


def test_spec_round_trip_and_dataset_export():
    spec = make_dgp("viii", 20, s_star=2, delta_d=0.95, seed=3)
    assert DgpSpec.from_dict(spec.to_dict()) == spec
    frame = simulate_dataset(spec, include_eps=True)
    assert list(frame.columns) == ["t", "y", "x2", "x3", "x4", "x5", "eps"]
    assert len(frame) == spec.n_obs
    assert "eps" not in simulate_dataset(spec, include_eps=False).columns
