"""Regression core: closed-form fit vs. brute-force oracle, invariances."""

import math

import numpy as np
import pytest

from wlvmser.calibration import (WeightedPoint, build_weighted_points,
                                 calibrate_parts, combine_rel_uncertainties,
                                 poisson_rel_uncertainty, predict_ser,
                                 weighted_linfit)
from wlvmser.errors import DegenerateFitError
from wlvmser.refdata import PUBLISHED_FIT, load_reference_dataset


def lstsq_oracle(points):
    """Brute-force normal equations via the weighted design matrix."""
    x = np.array([p.x for p in points])
    y = np.array([p.y for p in points])
    s = np.array([p.sigma_y for p in points])
    design = np.column_stack([x / s, 1.0 / s])
    coef, *_ = np.linalg.lstsq(design, y / s, rcond=None)
    cov = np.linalg.inv(design.T @ design)
    return coef[0], coef[1], math.sqrt(cov[0, 0]), math.sqrt(cov[1, 1]), cov[0, 1]


def random_points(rng, n):
    x = rng.uniform(-5, 5, n)
    x[1] = x[0] + rng.uniform(0.5, 2.0)  # guarantee distinct abscissas
    y = rng.uniform(-10, 10, n)
    s = rng.uniform(0.1, 3.0, n)
    return [WeightedPoint(float(a), float(b), float(c)) for a, b, c in zip(x, y, s)]


# --- scalar uncertainty helpers ----------------------------------------------

def test_poisson_rel_uncertainty_values():
    assert poisson_rel_uncertainty(10_000) == 0.01
    assert poisson_rel_uncertainty(1) == 1.0
    assert poisson_rel_uncertainty(2583) == pytest.approx(0.0197, abs=2e-4)
    with pytest.raises(ValueError):
        poisson_rel_uncertainty(0)


def test_combine_rel_uncertainties():
    assert combine_rel_uncertainties(0.02, 0.0) == 0.02
    assert combine_rel_uncertainties(0.03, 0.04) == pytest.approx(0.05)
    assert combine_rel_uncertainties(0.020, 0.03) == pytest.approx(0.0361, abs=1e-4)
    with pytest.raises(ValueError):
        combine_rel_uncertainties(-0.1, 0.0)


# --- weighted line fit ---------------------------------------------------------

def test_exact_line_fits_exactly():
    pts = [WeightedPoint(x, 2.0 * x + 1.0, 0.5) for x in (-2.0, 0.0, 1.0, 3.0)]
    fit = weighted_linfit(pts)
    assert fit.m == pytest.approx(2.0, abs=1e-12)
    assert fit.b == pytest.approx(1.0, abs=1e-12)
    assert fit.chi2 == pytest.approx(0.0, abs=1e-20)
    assert fit.r2 == pytest.approx(1.0)


def test_two_points_interpolate():
    fit = weighted_linfit([WeightedPoint(0.0, 1.0, 0.2), WeightedPoint(2.0, 5.0, 0.4)])
    assert fit.m == pytest.approx(2.0)
    assert fit.b == pytest.approx(1.0)
    assert fit.nu == 0
    assert fit.chi2 == pytest.approx(0.0, abs=1e-20)
    assert math.isnan(fit.chi2_red)


def test_degenerate_inputs_raise():
    with pytest.raises(DegenerateFitError):
        weighted_linfit([WeightedPoint(1.0, 1.0, 0.1)])
    with pytest.raises(DegenerateFitError):
        weighted_linfit([WeightedPoint(1.0, 1.0, 0.1),
                         WeightedPoint(1.0, 2.0, 0.1),
                         WeightedPoint(1.0, 3.0, 0.1)])
    with pytest.raises(ValueError):
        WeightedPoint(0.0, 1.0, 0.0)


def test_fit_matches_bruteforce_oracle():
    rng = np.random.default_rng(0)
    for _ in range(200):
        pts = random_points(rng, rng.integers(2, 21))
        fit = weighted_linfit(pts)
        m, b, sm, sb, cov = lstsq_oracle(pts)
        assert fit.m == pytest.approx(m, rel=1e-10, abs=1e-12)
        assert fit.b == pytest.approx(b, rel=1e-10, abs=1e-12)
        assert fit.sigma_m == pytest.approx(sm, rel=1e-8)
        assert fit.sigma_b == pytest.approx(sb, rel=1e-8)
        assert fit.cov_mb == pytest.approx(cov, rel=1e-8, abs=1e-14)


def test_sigma_scaling_invariance():
    rng = np.random.default_rng(1)
    pts = random_points(rng, 12)
    fit = weighted_linfit(pts)
    scaled = weighted_linfit([WeightedPoint(p.x, p.y, 3.0 * p.sigma_y) for p in pts])
    assert scaled.m == pytest.approx(fit.m, rel=1e-12)
    assert scaled.b == pytest.approx(fit.b, rel=1e-12)
    assert scaled.sigma_m == pytest.approx(3.0 * fit.sigma_m, rel=1e-12)
    assert scaled.sigma_b == pytest.approx(3.0 * fit.sigma_b, rel=1e-12)
    assert scaled.chi2 == pytest.approx(fit.chi2 / 9.0, rel=1e-12)


def test_y_shift_moves_intercept_only():
    rng = np.random.default_rng(2)
    pts = random_points(rng, 10)
    fit = weighted_linfit(pts)
    shifted = weighted_linfit([WeightedPoint(p.x, p.y + 7.5, p.sigma_y) for p in pts])
    assert shifted.m == pytest.approx(fit.m, rel=1e-10, abs=1e-12)
    assert shifted.b == pytest.approx(fit.b + 7.5, rel=1e-10)
    assert shifted.chi2 == pytest.approx(fit.chi2, rel=1e-9, abs=1e-12)


def test_x_affine_rescaling_maps_parameters():
    rng = np.random.default_rng(3)
    pts = random_points(rng, 10)
    a, d = 2.5, -1.25
    fit = weighted_linfit(pts)
    mapped = weighted_linfit([WeightedPoint(a * p.x + d, p.y, p.sigma_y) for p in pts])
    assert mapped.m == pytest.approx(fit.m / a, rel=1e-10)
    assert mapped.b == pytest.approx(fit.b - fit.m * d / a, rel=1e-9, abs=1e-12)


def test_fit_is_local_chi2_minimum():
    rng = np.random.default_rng(4)
    pts = random_points(rng, 15)
    fit = weighted_linfit(pts)

    def chi2(m, b):
        return sum(((p.y - m * p.x - b) / p.sigma_y) ** 2 for p in pts)

    base = chi2(fit.m, fit.b)
    eps = 1e-4
    for dm in (-eps, 0, eps):
        for db in (-eps, 0, eps):
            assert chi2(fit.m + dm, fit.b + db) >= base - 1e-12


# --- prediction -----------------------------------------------------------------

def _published_fit_like():
    """A fit carrying the published parameters, for arithmetic checks."""
    from wlvmser.calibration import CalibrationFit
    return CalibrationFit(m=4.32, b=-0.25, sigma_m=0.20, sigma_b=0.06,
                          cov_mb=-0.011, chi2=22.3, nu=23, chi2_red=0.97,
                          r2=0.96, n_points=25)


def test_predict_reference_margin():
    pred = predict_ser(_published_fit_like(), 0.409)
    assert pred.ser == pytest.approx(1.517, abs=5e-4)
    assert not pred.below_physical_floor


def test_predict_at_zero_and_root():
    fit = _published_fit_like()
    assert predict_ser(fit, 0.0).ser == pytest.approx(fit.b)
    root = -fit.b / fit.m
    assert predict_ser(fit, root).ser == pytest.approx(0.0, abs=1e-15)
    assert predict_ser(fit, root - 0.05).below_physical_floor


def test_prediction_sigma_minimized_at_weighted_centroid():
    rng = np.random.default_rng(5)
    pts = random_points(rng, 20)
    fit = weighted_linfit(pts)
    w = np.array([1 / p.sigma_y ** 2 for p in pts])
    x = np.array([p.x for p in pts])
    centroid = float((w * x).sum() / w.sum())
    offsets = np.linspace(0, 5, 12)
    sig_right = [predict_ser(fit, centroid + o).sigma for o in offsets]
    sig_left = [predict_ser(fit, centroid - o).sigma for o in offsets]
    assert all(np.diff(sig_right) > 0)
    assert all(np.diff(sig_left) > 0)
    assert predict_ser(fit, centroid).sigma <= min(sig_right[1], sig_left[1])


# --- calibration over datasets ----------------------------------------------------

def test_calibrate_parts_matches_direct_fit():
    datasets = load_reference_dataset()
    pairs = [pair for ds in datasets for pair in ds.pairs()]
    fit = calibrate_parts(pairs, 1200, weight_mode="combined")
    direct = weighted_linfit(build_weighted_points(pairs, 1200, "combined"))
    assert fit.m == direct.m and fit.b == direct.b and fit.chi2 == direct.chi2
    assert fit.weight_mode == "combined"
    assert fit.n_points == 25


def test_reference_dataset_fit_windows():
    datasets = load_reference_dataset()
    pairs = [pair for ds in datasets for pair in ds.pairs()]
    linear = calibrate_parts(pairs, 1200, weight_mode="linear-sum")
    assert 4.12 <= linear.m <= 4.52
    assert -0.31 <= linear.b <= -0.19
    assert linear.nu == 23
    assert 0.7 <= linear.chi2_red <= 1.3
    assert linear.r2 >= 0.94
    assert abs(linear.m - PUBLISHED_FIT["m"]) <= PUBLISHED_FIT["sigma_m"]
    # quadrature weights land the same line but understate the scatter
    quad = calibrate_parts(pairs, 1200, weight_mode="combined")
    assert 4.12 <= quad.m <= 4.52
    assert -0.31 <= quad.b <= -0.19
    assert quad.chi2_red > 1.3


def test_single_part_fit_is_strongly_linear():
    [part1] = [ds for ds in load_reference_dataset() if ds.part_id == "1"]
    fit = calibrate_parts(part1.pairs(), 1200, weight_mode="combined")
    assert fit.m > 0
    assert fit.r2 > 0.9


def test_unknown_weight_mode_rejected():
    datasets = load_reference_dataset()
    pairs = datasets[0].pairs()
    with pytest.raises(ValueError):
        calibrate_parts(pairs, 1200, weight_mode="nope")
