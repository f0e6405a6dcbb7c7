import numpy as np
import pytest

from roughmix.errors import ConfigurationError
from roughmix.estimate import (
    FitReport,
    default_lags,
    fit_mixture,
    fit_mixture_from_table,
    fit_single,
    fit_single_from_table,
    structure_function,
)
from roughmix.gmfbm import GmfbmSpec, SamplePath, TimeGrid, sample

BENCH = GmfbmSpec(hursts=(0.5, 0.75), coeffs=(1.0, 2.0), horizon=64.0)
BENCH_LAGS = [2 ** q for q in range(9)]


def bench_path(seed, n=2 ** 16):
    return sample(BENCH, TimeGrid.uniform(n, 64.0), seed, method="circulant")


# --------------------------------------------------------------------------- #
# structure function


def test_structure_function_linear_path():
    n, c = 256, 1.7
    t = np.linspace(0.0, 1.0, n + 1)
    path = SamplePath(grid=TimeGrid(t), values=c * t[:, None])
    dts, vals = structure_function(path, [1, 2, 4])
    assert np.allclose(vals, (c * dts) ** 2, atol=1e-14)


def test_structure_function_zero_path():
    path = SamplePath(grid=TimeGrid.uniform(64), values=np.zeros((65, 2)))
    _, vals = structure_function(path, [1, 2])
    assert np.all(vals == 0.0)


def test_structure_function_requires_uniform_grid():
    t = np.array([0.0, 0.1, 0.5, 1.0])
    path = SamplePath(grid=TimeGrid(t), values=np.zeros((4, 1)))
    with pytest.raises(ValueError):
        structure_function(path, [1])


def test_structure_function_lag_bounds():
    path = SamplePath(grid=TimeGrid.uniform(8), values=np.ones((9, 1)))
    with pytest.raises(ValueError):
        structure_function(path, [9])
    with pytest.raises(ValueError):
        structure_function(path, [0])


def test_default_lags_dyadic():
    assert default_lags(2 ** 12 + 1) == [1, 2, 4, 8, 16, 32, 64]


# --------------------------------------------------------------------------- #
# single-component fit


def test_fit_single_exact_power_law():
    dts = 2.0 ** -np.arange(1, 8)
    h, a2 = fit_single_from_table(dts, dts ** 1.2)
    assert h == pytest.approx(0.6, abs=1e-12)
    assert a2 == pytest.approx(1.0, abs=1e-12)


def test_fit_single_brownian():
    spec = GmfbmSpec(hursts=(0.5,), coeffs=(1.0,))
    hs = []
    for seed in range(5):
        path = sample(spec, TimeGrid.uniform(2 ** 13), seed, method="circulant")
        hs.append(fit_single(path)[0])
    assert abs(np.median(hs) - 0.5) < 0.05


def test_fit_single_known_hurst():
    spec = GmfbmSpec(hursts=(0.7,), coeffs=(1.0,))
    hs = []
    for seed in range(9):
        path = sample(spec, TimeGrid.uniform(2 ** 14), seed, method="circulant")
        hs.append(fit_single(path)[0])
    assert 0.65 <= np.median(hs) <= 0.75


def test_fit_single_rejects_degenerate_values():
    with pytest.raises(ValueError):
        fit_single_from_table([0.1, 0.2], [0.0, 1.0])
    with pytest.raises(ValueError):
        fit_single_from_table([0.1], [1.0])


# --------------------------------------------------------------------------- #
# mixture fit


def test_mixture_single_component_matches_fit_single():
    dts = 2.0 ** -np.arange(1, 9)
    vals = dts ** 1.2
    h_single, a2_single = fit_single_from_table(dts, vals)
    rep = fit_mixture_from_table(dts, vals, 1)
    assert abs(rep.hursts_hat[0] - h_single) < 1e-6
    assert abs(rep.coeffs_sq_hat[0] - a2_single) < 1e-6


def test_mixture_duplicate_hursts_collapse():
    dts = 2.0 ** -np.arange(1, 10)
    vals = 3.0 * dts ** 1.0  # one pure power law, asked for two components
    rep = fit_mixture_from_table(dts, vals, 2)
    assert rep.hursts_hat.size == 1
    assert any("non-identifiable" in f for f in rep.flags)
    assert rep.coeffs_sq_hat[0] == pytest.approx(3.0, rel=1e-4)


def test_mixture_too_few_lags_rejected():
    with pytest.raises(ConfigurationError):
        fit_mixture_from_table([0.1, 0.2, 0.4], [1.0, 2.0, 4.0], 2)
    with pytest.raises(ConfigurationError):
        fit_mixture_from_table([0.1, 0.2], [1.0, 2.0], 0)


def test_fit_report_validation():
    with pytest.raises(ValueError):
        FitReport(np.array([0.5]), np.array([-1.0]), 0.0, np.array([0.1]))
    with pytest.raises(ValueError):
        FitReport(np.array([1.5]), np.array([1.0]), 0.0, np.array([0.1]))
    rep = FitReport(np.array([0.8, 0.3]), np.array([1.0, 2.0]), 0.0,
                    np.array([0.1]))
    assert list(rep.hursts_hat) == [0.3, 0.8]  # sorted by Hurst
    assert list(rep.coeffs_sq_hat) == [2.0, 1.0]


def test_scale_equivariance():
    path = bench_path(0, n=2 ** 14)
    rep1 = fit_mixture(path, lags=BENCH_LAGS, n_components=2)
    scaled = SamplePath(grid=path.grid, values=3.0 * path.values)
    rep3 = fit_mixture(scaled, lags=BENCH_LAGS, n_components=2)
    assert np.allclose(rep3.hursts_hat, rep1.hursts_hat, atol=1e-7)
    assert np.allclose(rep3.coeffs_sq_hat, 9.0 * rep1.coeffs_sq_hat, rtol=1e-6)


def test_time_reversal_invariance():
    path = bench_path(1, n=2 ** 13)
    rev = SamplePath(grid=path.grid, values=path.values[::-1].copy())
    lags = [1, 2, 4, 8, 16, 32]
    _, v1 = structure_function(path, lags)
    _, v2 = structure_function(rev, lags)
    assert np.allclose(v1, v2, rtol=1e-12)
    rep1 = fit_mixture(path, lags=lags, n_components=2)
    rep2 = fit_mixture(rev, lags=lags, n_components=2)
    assert np.allclose(rep1.hursts_hat, rep2.hursts_hat, atol=1e-9)


def test_two_component_benchmark_small_median():
    reps = [
        fit_mixture(bench_path(seed), lags=BENCH_LAGS, n_components=2)
        for seed in range(3)
    ]
    assert all(rep.hursts_hat.size == 2 for rep in reps)
    med = np.median([rep.hursts_hat for rep in reps], axis=0)
    assert abs(med[0] - 0.5) < 0.1
    assert abs(med[1] - 0.75) < 0.1


def test_bootstrap_standard_errors():
    rep = fit_mixture(bench_path(5, n=2 ** 14), lags=BENCH_LAGS, n_components=2,
                      n_bootstrap=30)
    assert rep.stderr_hursts is not None
    assert np.all(rep.stderr_hursts >= 0.0)
    assert rep.stderr_coeffs_sq.shape == rep.coeffs_sq_hat.shape


def test_consistency_trend_with_sample_size():
    # two-component error shrinks from n=2^10 to n=2^16 (median over seeds)
    def median_err(n, lags):
        errs = []
        for seed in range(5):
            rep = fit_mixture(bench_path(seed, n=n), lags=lags, n_components=2)
            if rep.hursts_hat.size == 2:
                errs.append(float(np.abs(rep.hursts_hat - [0.5, 0.75]).sum()))
            else:
                errs.append(1.0)
        return float(np.median(errs))

    coarse = median_err(2 ** 10, [1, 2, 4, 8])
    fine = median_err(2 ** 16, BENCH_LAGS)
    assert fine <= coarse


def test_refit_residual_self_consistent():
    # residual on data regenerated from the fitted model stays within 2x
    lags = [2 ** q for q in range(7)]
    orig = []
    refit = []
    for seed in range(5):
        rep = fit_mixture(bench_path(seed, n=2 ** 12), lags=lags,
                          n_components=2)
        orig.append(rep.residual)
        # keep exponents in the range where the circulant embedding is PSD
        hs = tuple(np.clip(rep.hursts_hat, 0.05, 0.9))
        cs = tuple(np.sqrt(np.maximum(rep.coeffs_sq_hat, 1e-12)))
        fitted_spec = GmfbmSpec(hursts=hs, coeffs=cs, horizon=64.0)
        synth = sample(fitted_spec, TimeGrid.uniform(2 ** 12, 64.0), 100 + seed,
                       method="circulant")
        rep2 = fit_mixture(synth, lags=lags, n_components=2)
        refit.append(rep2.residual)
    assert np.median(refit) <= 2.0 * np.median(orig)
    assert np.median(orig) <= 2.0 * np.median(refit)
