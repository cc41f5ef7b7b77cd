"""Heavy-tailed noise generation: stable draws, AR(1) coloring, ingestion."""

import numpy as np
import pytest

from kronsaf.errors import IngestionError, ParameterError
from kronsaf.noise import (
    AlphaStableParams,
    ArOneParams,
    cauchy_driver,
    load_recording,
    sample_alpha_stable,
    sample_ar1,
)

N_BIG = 1_000_000


def _ecf_error(v, alpha, gamma, t):
    """|empirical E[cos(t v)] - exp(-gamma |t|^alpha)| (symmetric law, so the
    characteristic function is real)."""
    return abs(np.mean(np.cos(t * v)) - np.exp(-gamma * abs(t) ** alpha))


def test_param_validation():
    with pytest.raises(ParameterError):
        AlphaStableParams(alpha=0.0, gamma=1.0)
    with pytest.raises(ParameterError):
        AlphaStableParams(alpha=2.1, gamma=1.0)
    with pytest.raises(ParameterError):
        AlphaStableParams(alpha=1.5, gamma=0.0)
    with pytest.raises(ParameterError):
        ArOneParams(pole=1.0)
    with pytest.raises(ParameterError):
        ArOneParams(pole=0.5, variance=-1.0)


def test_gaussian_edge_variance():
    # alpha=2 is Gaussian with variance 2*gamma
    v = sample_alpha_stable(AlphaStableParams(alpha=2.0, gamma=0.5, seed=1), N_BIG)
    assert v.var() == pytest.approx(1.0, rel=0.02)


@pytest.mark.parametrize("alpha", [0.75, 1.0, 1.5, 2.0])
def test_characteristic_function_all_alpha(alpha):
    gamma = 0.5
    v = sample_alpha_stable(AlphaStableParams(alpha=alpha, gamma=gamma, seed=11), N_BIG)
    for t in (0.5, 1.0, 2.0):
        assert _ecf_error(v, alpha, gamma, t) < 0.01


def test_cauchy_median_scale():
    # alpha=1 is Cauchy with scale gamma: |median| near 0, IQR = 2*gamma
    v = sample_alpha_stable(AlphaStableParams(alpha=1.0, gamma=0.3, seed=5), N_BIG)
    q1, q2, q3 = np.quantile(v, [0.25, 0.5, 0.75])
    assert abs(q2) < 0.01
    assert q3 - q1 == pytest.approx(2 * 0.3, rel=0.02)


def test_smaller_alpha_heavier_tails():
    heavy = sample_alpha_stable(AlphaStableParams(alpha=0.8, gamma=0.1, seed=2), N_BIG)
    light = sample_alpha_stable(AlphaStableParams(alpha=1.8, gamma=0.1, seed=2), N_BIG)
    thresh = 50.0
    assert np.mean(np.abs(heavy) > thresh) > np.mean(np.abs(light) > thresh)


def test_determinism_by_seed():
    p = AlphaStableParams(alpha=1.3, gamma=0.2, seed=9)
    assert np.array_equal(sample_alpha_stable(p, 1000), sample_alpha_stable(p, 1000))
    other = AlphaStableParams(alpha=1.3, gamma=0.2, seed=10)
    assert not np.array_equal(sample_alpha_stable(p, 1000), sample_alpha_stable(other, 1000))


def test_ar1_lag1_autocorrelation():
    x = sample_ar1(ArOneParams(pole=0.9, variance=1.0, seed=3), N_BIG)
    xc = x - x.mean()
    rho1 = np.dot(xc[1:], xc[:-1]) / np.dot(xc, xc)
    assert rho1 == pytest.approx(0.9, abs=0.02)


def test_ar1_zero_pole_is_driver_identity():
    rng = np.random.default_rng(4)
    x = sample_ar1(ArOneParams(pole=0.0, variance=2.0), 500, rng=rng)
    rng2 = np.random.default_rng(4)
    w = np.sqrt(2.0) * rng2.standard_normal(500)
    assert np.array_equal(x, w)


def test_ar1_recursion_matches_direct():
    params = ArOneParams(pole=0.7, variance=1.0, seed=8)
    x = sample_ar1(params, 200)
    rng = np.random.default_rng(8)
    w = rng.standard_normal(200)
    direct = np.empty(200)
    acc = 0.0
    for k in range(200):
        acc = 0.7 * acc + w[k]
        direct[k] = acc
    assert np.allclose(x, direct, atol=1e-12)


def test_cauchy_ar1_driver():
    x = sample_ar1(ArOneParams(pole=0.5), 100_000,
                   driver=cauchy_driver(0.2), rng=np.random.default_rng(6))
    # heavy-tailed colored noise: huge excursions relative to the median scale
    assert np.max(np.abs(x)) > 100 * np.median(np.abs(x))


def test_load_recording_normalization(tmp_path):
    path = tmp_path / "rec.txt"
    np.savetxt(path, np.array([0.5, -2.0, 1.0]), fmt="%.17g")
    x = load_recording(path)
    assert np.max(np.abs(x)) == pytest.approx(1.0, abs=0)
    raw = load_recording(path, normalize=False)
    assert np.max(np.abs(raw)) == pytest.approx(2.0, abs=0)
    zero = tmp_path / "zero.txt"
    np.savetxt(zero, np.zeros(4), fmt="%.17g")
    with pytest.raises(IngestionError):
        load_recording(zero)
