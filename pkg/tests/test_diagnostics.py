import numpy as np
import pytest

from hsens.diagnostics import autocorrelation, effective_sample_size, geweke_z, split_rhat


def _ar1(phi, n, seed):
    rng = np.random.default_rng(seed)
    e = rng.standard_normal(n)
    x = np.empty(n)
    x[0] = e[0] / np.sqrt(1 - phi**2)
    for t in range(1, n):
        x[t] = phi * x[t - 1] + e[t]
    return x


def test_autocorrelation_lag0_and_ar1():
    x = _ar1(0.6, 50_000, 0)
    rho = autocorrelation(x)
    assert rho[0] == 1.0
    assert rho[1] == pytest.approx(0.6, abs=0.02)
    assert rho[2] == pytest.approx(0.36, abs=0.02)


def test_ess_iid_close_to_n():
    x = np.random.default_rng(1).standard_normal(20_000)
    assert effective_sample_size(x) == pytest.approx(20_000, rel=0.1)


def test_ess_ar1_matches_theory():
    phi = 0.8
    n = 100_000
    expected = n * (1 - phi) / (1 + phi)
    assert effective_sample_size(_ar1(phi, n, 2)) == pytest.approx(expected, rel=0.15)


def test_ess_constant_chain():
    assert effective_sample_size(np.ones(100)) == 100


def test_geweke_iid_is_standard_normal():
    zs = [geweke_z(np.random.default_rng(s).standard_normal(2000)) for s in range(200)]
    assert abs(np.mean(zs)) < 0.25
    assert np.std(zs) == pytest.approx(1.0, abs=0.2)


def test_geweke_detects_drift():
    x = np.random.default_rng(3).standard_normal(5000) + np.linspace(0, 3, 5000)
    assert abs(geweke_z(x)) > 5


def test_split_rhat():
    rng = np.random.default_rng(4)
    same = rng.standard_normal((4, 2000))
    assert split_rhat(same) == pytest.approx(1.0, abs=0.01)
    shifted = same + np.array([[0], [0], [0], [3]])
    assert split_rhat(shifted) > 1.3
    with pytest.raises(ValueError):
        split_rhat(np.ones((2, 3)))
