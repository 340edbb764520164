import json
import math

import numpy as np
import pytest

from seqmon.dgp import make_dgp
from seqmon.errors import MisuseError, ParameterError
from seqmon.experiments import (
    CellResult,
    ExperimentPlan,
    cell_seed,
    run_cell,
    run_power_study,
    run_size_study,
    tau_density,
    write_density,
    write_report,
)


def small_plan(dgp_ids, **kwargs):
    base = dict(Ms=(40,), gammas=(0.0,), alphas=(0.05,), s_stars=(1,), reps=60, chunk=25)
    base.update(kwargs)
    return ExperimentPlan(tuple(dgp_ids), **base)


@pytest.mark.parametrize("kwargs", [
    {"gammas": ()},
    {"reps": 0},
    {"c": -1.0},
    {"workers": 0},
    {"horizon_multiple": 0},
])
def test_plan_validation(kwargs):
    with pytest.raises(ParameterError):
        small_plan(["i"], **kwargs)


def test_plan_rejects_unknown_worlds():
    with pytest.raises(ParameterError):
        small_plan(["xiv"])


def test_plan_normalises_ids():
    plan = small_plan([" V ", "vii"])
    assert plan.dgp_ids == ("v", "vii")
    assert plan.to_dict()["Ms"] == (40,)


def test_studies_refuse_the_wrong_worlds():
    with pytest.raises(MisuseError):
        run_size_study(small_plan(["i", "v"]))
    with pytest.raises(MisuseError):
        run_power_study(small_plan(["iii"]))
    with pytest.raises(MisuseError):
        tau_density(make_dgp("ii", 40), reps=10)


def test_cell_seed_ignores_boundary_settings_but_not_the_world():
    a = cell_seed(0, "v", 50, 5, 0.6)
    assert a == cell_seed(0, "v", 50, 5, 0.6)
    assert len({a, cell_seed(1, "v", 50, 5, 0.6), cell_seed(0, "v", 100, 5, 0.6),
                cell_seed(0, "v", 50, 1, 0.6), cell_seed(0, "vi", 50, 5, 0.6)}) == 5


def test_huge_critical_value_never_stops():
    report = run_size_study(small_plan(["i"], c=1e9))
    (cell,) = report.cells
    assert cell.c == 1e9
    assert cell.rates == (0.0,) * 10
    assert cell.horizons == tuple(40 * i for i in range(1, 11))
    assert np.all(cell.taus == 0)
    assert math.isnan(cell.tau_summary()["tau_mean"])


def test_size_curves_are_cumulative():
    report = run_size_study(small_plan(["i", "iv"], gammas=(0.0, 0.45), alphas=(0.10, 0.05),
                                       reps=100))
    assert len(report.cells) == 2 * 2 * 2
    for cell in report.cells:
        assert all(np.diff(cell.detections) >= 0)
        assert cell.rate == cell.rates[-1]
    curves = report.curve_frame()
    assert len(curves) == 8 * 10
    assert set(curves["multiple"]) == set(range(1, 11))


def test_smaller_alpha_never_stops_earlier():
    spec = make_dgp("v", 50, s_star=5, seed=3)
    cells = run_cell(spec, [0.0, 0.45], [0.10, 0.05, 0.01], reps=80, chunk=30)
    assert [(c.gamma, c.alpha) for c in cells[:3]] == [(0.0, 0.10), (0.0, 0.05), (0.0, 0.01)]
    for g in range(2):
        loose, mid, tight = cells[3 * g : 3 * g + 3]
        for a, b in ((loose, mid), (mid, tight)):
            stopped = b.taus > 0
            assert np.all(a.taus[stopped] > 0)
            assert np.all(a.taus[stopped] <= b.taus[stopped])
            assert a.rate >= b.rate


def test_results_do_not_depend_on_threads_or_chunks():
    spec = make_dgp("vi", 40, s_star=1, seed=5)
    one = run_cell(spec, [0.25], [0.05], reps=70, chunk=20, workers=1)[0]
    two = run_cell(spec, [0.25], [0.05], reps=70, chunk=20, workers=2)[0]
    again = run_cell(spec, [0.25], [0.05], reps=70, chunk=70)[0]
    np.testing.assert_array_equal(one.taus, two.taus)
    np.testing.assert_array_equal(one.taus, again.taus)
    assert one == two


def test_run_cell_checks_horizons():
    spec = make_dgp("i", 30, extra_horizon=60)
    with pytest.raises(ParameterError):
        run_cell(spec, [0.0], [0.05], reps=5, horizons=[61])
    with pytest.raises(ParameterError):
        run_cell(spec, [0.0], [0.05], reps=0)
    with pytest.raises(ParameterError):
        run_cell(make_dgp("i", 30, extra_horizon=0), [0.0], [0.05], reps=5)


def test_standard_error_and_rows():
    cell = CellResult("v", 50, 0.0, 0.05, 2.2365, 1, 0.6, 400, (400,), (100,),
                      np.array([3] * 100 + [0] * 300))
    assert cell.rate == 25.0
    assert cell.standard_error == pytest.approx(100 * math.sqrt(0.25 * 0.75 / 400))
    row = cell.as_row()
    assert row["tau_median"] == 3.0 and row["se"] == cell.standard_error


def test_rates_leave_out_singular_replications():
    taus = np.array([3] * 100 + [0] * 280 + [-1] * 20)
    cell = CellResult("v", 50, 0.0, 0.05, 2.2365, 1, 0.6, 400, (400,), (100,), taus,
                      excluded=20)
    assert cell.monitored == 380
    assert cell.rate == pytest.approx(100 * 100 / 380)
    assert cell.standard_error == pytest.approx(
        100 * math.sqrt((100 / 380) * (280 / 380) / 380))
    assert cell.stopped.size == 100
    assert cell.as_row()["excluded"] == 20
    nothing = CellResult("v", 50, 0.0, 0.05, 2.2365, 1, 0.6, 2, (400,), (0,),
                         np.array([-1, -1]), excluded=2)
    assert math.isnan(nothing.rate) and math.isnan(nothing.standard_error)


def test_explosive_alternative_is_found():
    report = run_power_study(small_plan(["xi"], deltas=(1.25,), Ms=(50,), reps=200, chunk=100))
    cell = report.find(dgp="xi", M=50, delta_d=1.25)
    assert cell.rate >= 99.0
    assert cell.horizons == (500,)


def test_power_study_grid():
    report = run_power_study(small_plan(["vii"], deltas=(0.90, 0.99), s_stars=(1, 5), reps=20))
    assert len(report.cells) == 2 * 2
    assert {c.delta_d for c in report.cells} == {0.90, 0.99}
    with pytest.raises(KeyError):
        report.find(dgp="vii")
    with pytest.raises(ParameterError):
        run_power_study(small_plan(["vii"], deltas=(0.60,)))


def test_tau_density_of_an_explosive_change():
    spec = make_dgp("xii", 50, s_star=1, delta_d=1.25, seed=9)
    res = tau_density(spec, reps=300, bins=20, points=50, chunk=100)
    assert res.censored_fraction <= 0.01
    assert res.mass_below(100) >= 0.99
    assert res.histogram.shape == (20,) and res.edges.shape == (21,)
    if res.grid.size > 1:
        assert res.density.shape == (50,)
    again = tau_density(spec, reps=300, bins=20, points=50, chunk=100)
    np.testing.assert_array_equal(res.histogram, again.histogram)
    np.testing.assert_array_equal(res.taus, again.taus)


def test_tau_density_when_nothing_stops():
    spec = make_dgp("v", 40, s_star=1, seed=2)
    res = tau_density(spec, reps=20, c=1e9)
    assert res.censored_fraction == 1.0
    assert res.mass_below(1e9) == 0.0
    assert res.taus.size == 0


def test_tau_density_when_every_run_stops_at_once():
    spec = make_dgp("v", 40, s_star=1, seed=2)
    res = tau_density(spec, reps=20, c=1e-9)
    np.testing.assert_array_equal(res.taus, np.ones(20))
    assert res.censored_fraction == 0.0
    np.testing.assert_array_equal(res.grid, [1.0])
    np.testing.assert_array_equal(res.density, [1.0])
    assert np.isfinite(res.histogram).all() and np.isfinite(res.edges).all()
    assert res.mass_below(1) == 1.0


def test_write_report(tmp_path):
    report = run_size_study(small_plan(["ii"], reps=20))
    paths = write_report(report, str(tmp_path / "size"))
    for name in ("cells.csv", "curves.csv", "summary.json", "manifest.json"):
        assert (tmp_path / "size" / name).exists()
    summary = json.loads((tmp_path / "size" / "summary.json").read_text())
    assert summary["kind"] == "size"
    assert "created_at" not in json.dumps(summary)
    manifest = json.loads((tmp_path / "size" / "manifest.json").read_text())
    assert manifest["command"] == "simulate-size"
    assert manifest["seed"] == 0 and manifest["reps"] == 20
    assert set(paths) == {"cells", "curves", "summary", "manifest"}

    power = run_power_study(small_plan(["v"], reps=10))
    assert "curves" not in write_report(power, str(tmp_path / "power"))


def test_write_density(tmp_path):
    spec = make_dgp("xi", 40, s_star=1, delta_d=1.25, seed=1)
    res = tau_density(spec, reps=50)
    write_density(res, spec, 50, str(tmp_path), {"gamma": 0.0, "alpha": 0.05})
    for name in ("tau_histogram.csv", "tau_density.csv", "summary.json", "manifest.json"):
        assert (tmp_path / name).exists()


@pytest.mark.slow
def test_stationary_alternative_power():
    plan = ExperimentPlan(("v",), Ms=(100,), gammas=(0.45,), alphas=(0.05,), s_stars=(1,),
                          reps=10_000, master_seed=1)
    cell = run_power_study(plan).cells[0]
    assert cell.rate == pytest.approx(99.47, abs=1.0)


@pytest.mark.slow
def test_near_unit_root_power():
    plan = ExperimentPlan(("vii",), Ms=(50,), gammas=(0.0,), alphas=(0.10,), s_stars=(1,),
                          deltas=(0.90,), reps=10_000, master_seed=2)
    cell = run_power_study(plan).cells[0]
    assert cell.rate == pytest.approx(73.61, abs=2.0)


@pytest.mark.slow
def test_size_near_nominal():
    plan = ExperimentPlan(("i",), Ms=(300,), gammas=(0.25,), alphas=(0.05,), reps=10_000,
                          master_seed=3)
    cell = run_size_study(plan).cells[0]
    assert 3.0 <= cell.rate <= 7.0
