import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hsens.dataio import ECOLOGY_TABLE, FORESTRY_TABLE, Dataset, JournalRecord
from hsens.mcmc import Chain
from hsens.models import Covariates, ModelKind, ParamVector, evaluate_mean
from hsens.sensitivity import (
    LOCAL_FACTORS,
    GridMode,
    SensitivityGrid,
    UnsupportedCombination,
    build_global_grid,
    build_local_grid,
    progressive_si,
    propagate,
    read_curve_csv,
    sensitivity_index,
    write_curve_csv,
)

GS = ModelKind.GlanzelSchubert


def _dataset_with_percentiles(table, n=101):
    """Dataset whose type-7 percentiles at 0, 5, ..., 100 hit the table knots.

    With n = 101 records, the k-th percentile is exactly the (k+1)-th
    order statistic, so placing knots at those ranks and interpolating
    log-linearly in between reproduces every published percentile.
    """
    pct = np.array([0, 5, 10, 25, 50, 75, 90, 95, 100], float)
    ranks = np.arange(n) * 100 / (n - 1)
    cols = {k: np.exp(np.interp(ranks, pct, np.log(table[k]))) for k in ("h", "P", "C")}
    cols["h"] = np.minimum(cols["h"], cols["P"])
    recs = tuple(JournalRecord(f"J{i}", cols["h"][i], cols["P"][i], cols["C"][i]) for i in range(n))
    return Dataset(recs)


def _chain(kind, **draws):
    names = list(draws)
    arr = np.column_stack([np.atleast_1d(np.asarray(v, float)) for v in draws.values()])
    return Chain(arr, np.zeros(len(arr)), names, {}, None, np.arange(len(arr)), kind)


def test_global_grid_ecology_c():
    g = build_global_grid(_dataset_with_percentiles(ECOLOGY_TABLE), "C")
    np.testing.assert_allclose(g.values, [291, 754.6, 3651.5, 14917.5, 46843, 143452.1, 193911.8], rtol=1e-12)
    assert g.fixed_value == pytest.approx(1351, rel=1e-12)
    assert g.mode is GridMode.Global


def test_global_grid_forestry_p():
    g = build_global_grid(_dataset_with_percentiles(FORESTRY_TABLE), "P")
    np.testing.assert_allclose(g.values, [46.9, 69, 173.25, 405.5, 1616, 3173.5, 6116], rtol=1e-12)
    assert g.fixed_value == pytest.approx(2435, rel=1e-12)


def test_global_grid_single_journal():
    g = build_global_grid(Dataset((JournalRecord("A", 3, 40, 120),)), "C")
    assert np.all(g.values == 120)
    assert g.fixed_value == 40


def test_local_grid():
    data = Dataset(tuple(JournalRecord(f"J{i}", 1, 10 * (i + 1), c) for i, c in enumerate([500, 1000, 1500])))
    g = build_local_grid(data, "C")
    np.testing.assert_allclose(g.values, np.arange(700, 1301, 50), rtol=1e-12)
    assert len(g.values) == 13
    assert g.fixed_value == 20
    assert LOCAL_FACTORS[0] == 0.7 and LOCAL_FACTORS[-1] == 1.3


def test_local_grid_ecology_centre():
    g = build_local_grid(_dataset_with_percentiles(ECOLOGY_TABLE), "C")
    assert g.values[6] == pytest.approx(14917.5, rel=1e-12)


def test_grid_validation():
    with pytest.raises(ValueError):
        SensitivityGrid("X", [1, 2], 1.0, GridMode.Global)
    with pytest.raises(ValueError):
        SensitivityGrid("C", [2, 1], 1.0, GridMode.Global)
    with pytest.raises(ValueError):
        SensitivityGrid("C", [], 1.0, GridMode.Global)


def test_single_draw_curve_is_pointwise_mean():
    grid = SensitivityGrid("C", np.array([100.0, 1000.0, 10000.0]), 500.0, GridMode.Global)
    curve = propagate(_chain(GS, alpha=[1.8], c=[0.7], tau=[0.01]), GS, grid)
    expected = [evaluate_mean(GS, ParamVector(1.8, c=0.7), Covariates(500.0, g)) for g in grid.values]
    np.testing.assert_allclose(curve.h_mean, expected, rtol=1e-14)
    np.testing.assert_allclose(curve.h_q025, expected, rtol=1e-14)
    np.testing.assert_allclose(curve.h_q975, expected, rtol=1e-14)


def test_two_identical_draws_match_single():
    grid = SensitivityGrid("P", np.array([50.0, 500.0, 5000.0]), 3000.0, GridMode.Global)
    one = propagate(_chain(GS, alpha=[1.8], c=[0.7]), GS, grid)
    two = propagate(_chain(GS, alpha=[1.8, 1.8], c=[0.7, 0.7]), GS, grid)
    for field in ("h_mean", "h_q025", "h_q50", "h_q975"):
        np.testing.assert_allclose(getattr(one, field), getattr(two, field), rtol=1e-14)


def test_gs_curve_increasing_in_c():
    rng = np.random.default_rng(0)
    chain = _chain(GS, alpha=1 + rng.gamma(5, 0.15, 2000), c=rng.gamma(4, 0.2, 2000))
    grid = build_global_grid(_dataset_with_percentiles(ECOLOGY_TABLE), "C")
    curve = propagate(chain, GS, grid)
    assert np.all(np.diff(curve.h_mean) > 0)
    assert np.all(curve.h_q025 <= curve.h_q50) and np.all(curve.h_q50 <= curve.h_q975)


def test_hirsch_uses_fixed_params():
    chain = _chain(ModelKind.HirschNB, alpha=[2.0], a=[1.2], b=[1.5], r=[7.0])
    grid = SensitivityGrid("C", np.array([10.0, 100.0]), 30.0, GridMode.Global)
    curve = propagate(chain, ModelKind.HirschNB, grid)
    np.testing.assert_allclose(curve.h_mean, (grid.values / 2.0) ** (1 / 1.8), rtol=1e-14)


@pytest.mark.parametrize("kind", [ModelKind.EggheRousseau, ModelKind.HirschGaussian, ModelKind.HirschNB])
def test_p_variation_unsupported_for_c_only_models(kind):
    grid = SensitivityGrid("P", np.array([10.0, 20.0]), 100.0, GridMode.Global)
    with pytest.raises(UnsupportedCombination):
        propagate(_chain(kind, alpha=[3.0], a=[1.0], b=[1.0]), kind, grid)


def test_propagate_thins_draws():
    chain = _chain(GS, alpha=np.linspace(1.5, 2.0, 12000), c=np.full(12000, 0.7))
    grid = SensitivityGrid("C", np.array([100.0, 200.0]), 50.0, GridMode.Global)
    assert propagate(chain, GS, grid).samples.shape == (5000, 2)
    assert propagate(chain, GS, grid, max_draws=None).samples.shape == (12000, 2)


def test_si_examples():
    assert sensitivity_index([10.0, 50.0]).si == pytest.approx(0.8)
    res = sensitivity_index([4.0, 4.0, 4.0])
    assert res.si == 0.0 and res.h_max == res.h_min == 4.0
    with pytest.raises(ValueError):
        sensitivity_index([0.0, 0.0])


def test_progressive_si():
    prog = progressive_si([10, 12, 30, 25, 40])
    assert prog[0] == 0.0
    assert prog[-1] == pytest.approx(0.75)
    assert prog[2] == pytest.approx(20 / 30)


curves = arrays(np.float64, st.integers(1, 30), elements=st.floats(0, 1e6)).filter(lambda a: a.max() > 0)


@settings(max_examples=300)
@given(curves)
def test_si_bounds_and_progressive_monotone(h):
    res = sensitivity_index(h)
    assert 0.0 <= res.si <= 1.0
    assert np.all(np.diff(res.progressive) >= 0)
    assert res.progressive[-1] == res.si


@given(curves, st.data())
def test_subgrid_si_not_larger(h, data):
    idx = data.draw(st.lists(st.integers(0, len(h) - 1), min_size=1, unique=True))
    sub = h[sorted(idx)]
    if sub.max() > 0:
        assert sensitivity_index(sub).si <= sensitivity_index(h).si + 1e-15


@given(st.floats(0.01, 100))
def test_si_invariant_to_scaling_c(k):
    rng = np.random.default_rng(1)
    alpha = 1 + rng.gamma(5, 0.15, 500)
    c = rng.gamma(4, 0.2, 500)
    grid = SensitivityGrid("C", np.array([300.0, 3000.0, 30000.0]), 1000.0, GridMode.Global)
    base = sensitivity_index(propagate(_chain(GS, alpha=alpha, c=c), GS, grid))
    scaled = sensitivity_index(propagate(_chain(GS, alpha=alpha, c=k * c), GS, grid))
    assert scaled.si == pytest.approx(base.si, rel=1e-12)


def test_local_si_below_global_si():
    data = _dataset_with_percentiles(ECOLOGY_TABLE)
    rng = np.random.default_rng(2)
    chain = _chain(GS, alpha=1 + rng.gamma(5, 0.15, 1000), c=rng.gamma(4, 0.2, 1000))
    for varied in ("P", "C"):
        g = sensitivity_index(propagate(chain, GS, build_global_grid(data, varied))).si
        l = sensitivity_index(propagate(chain, GS, build_local_grid(data, varied))).si
        assert l < g


def test_si_draw_band_brackets_point_estimate():
    rng = np.random.default_rng(3)
    chain = _chain(GS, alpha=1 + rng.gamma(5, 0.15, 1000), c=rng.gamma(4, 0.2, 1000))
    grid = build_global_grid(_dataset_with_percentiles(ECOLOGY_TABLE), "P")
    res = sensitivity_index(propagate(chain, GS, grid))
    assert res.si_q025 <= res.si <= res.si_q975


def test_curve_csv_round_trip(tmp_path):
    grid = SensitivityGrid("C", np.array([100.0, 1000.0]), 500.0, GridMode.Local)
    curve = propagate(_chain(GS, alpha=[1.8, 1.9], c=[0.7, 0.6]), GS, grid)
    path = tmp_path / "curve.csv"
    write_curve_csv(curve, path)
    assert path.read_text().splitlines()[0] == "grid_value,h_mean,h_q025,h_q50,h_q975"
    cols = read_curve_csv(path)
    np.testing.assert_array_equal(cols["h_mean"], curve.h_mean)
    np.testing.assert_array_equal(cols["grid_value"], grid.values)
