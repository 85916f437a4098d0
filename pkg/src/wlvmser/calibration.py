"""Uncertainty models and the weighted-regression calibration core.

The calibration fits a straight line SER = m * margin + b through the
(margin, SER) pairs of the irradiated parts, weighting each point by its
inverse variance, and then predicts the SER of non-irradiated parts from
their electrically measured margins alone.

Closed-form estimators for the weighted line fit (slope, intercept, their
variances and covariance) follow the standard least-squares sums; the
goodness of fit is reported as chi-squared per degree of freedom together
with a weighted R².

Point uncertainties combine a statistical term (Poisson counting,
1/sqrt(N)) with the systematic flux-positioning term.  Three combination
recipes are provided because the reference study does not disclose its
own:

* ``combined`` — quadrature sum (library default),
* ``stat-only`` — statistical term alone,
* ``linear-sum`` — arithmetic sum; this is the recipe that reproduces the
  published fit (chi2 22.6 vs published 22.3 with matching parameter
  uncertainties), so it is what the reproduction command uses.

The low margin-measurement error is neglected in the fit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateFitError
from .protocols import SerMeasurement, SweepResult, word_line_voltage_margin

WEIGHT_MODES = ("combined", "stat-only", "linear-sum")

DEFAULT_GEOM_UNC = 0.03

# relative |determinant| below which the design matrix is unusable
_DEGENERATE_RTOL = 1e-12


@dataclass(frozen=True)
class WeightedPoint:
    """One calibration point: margin (V), SER and its absolute 1-sigma."""

    x: float
    y: float
    sigma_y: float

    def __post_init__(self):
        if not self.sigma_y > 0:
            raise ValueError(f"sigma_y must be > 0, got {self.sigma_y}")


@dataclass
class CalibrationFit:
    """Weighted straight-line fit with goodness-of-fit figures.

    Units follow the calibration inputs: slope in µSEU/(bit·s·V),
    intercept in µSEU/(bit·s).
    """

    m: float
    b: float
    sigma_m: float
    sigma_b: float
    cov_mb: float
    chi2: float
    nu: int
    chi2_red: float
    r2: float
    n_points: int
    weight_mode: str | None = None

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "b": self.b,
            "sigma_m": self.sigma_m,
            "sigma_b": self.sigma_b,
            "cov_mb": self.cov_mb,
            "chi2": self.chi2,
            "nu": self.nu,
            "chi2_red": self.chi2_red,
            "r2": self.r2,
            "n_points": self.n_points,
            "weight_mode": self.weight_mode,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "CalibrationFit":
        return cls(
            m=float(raw["m"]),
            b=float(raw["b"]),
            sigma_m=float(raw["sigma_m"]),
            sigma_b=float(raw["sigma_b"]),
            cov_mb=float(raw["cov_mb"]),
            chi2=float(raw["chi2"]),
            nu=int(raw["nu"]),
            chi2_red=float(raw["chi2_red"]),
            r2=float(raw["r2"]),
            n_points=int(raw["n_points"]),
            weight_mode=raw.get("weight_mode"),
        )


@dataclass(frozen=True)
class Prediction:
    """Predicted SER with the fit-parameter uncertainty propagated."""

    ser: float
    sigma: float

    @property
    def below_physical_floor(self) -> bool:
        return self.ser < 0


def poisson_rel_uncertainty(n_tot: int) -> float:
    """Relative 1-sigma statistical uncertainty of a Poisson count."""
    if n_tot <= 0:
        raise ValueError("relative uncertainty undefined for n_tot <= 0")
    return 1.0 / math.sqrt(n_tot)


def combine_rel_uncertainties(stat: float, geom: float) -> float:
    """Quadrature sum of the statistical and geometric relative terms."""
    if stat < 0 or geom < 0:
        raise ValueError("relative uncertainties must be >= 0")
    return math.hypot(stat, geom)


def _rel_uncertainty(stat: float, geom: float, weight_mode: str) -> float:
    if weight_mode == "combined":
        return combine_rel_uncertainties(stat, geom)
    if weight_mode == "stat-only":
        return stat
    if weight_mode == "linear-sum":
        return stat + geom
    raise ValueError(f"unknown weight mode {weight_mode!r}; pick from {WEIGHT_MODES}")


def weighted_linfit(points: Sequence[WeightedPoint]) -> CalibrationFit:
    """Minimize sum(((y - m*x - b)/sigma)^2) over (m, b), closed form.

    Needs at least two points with distinct x.  Returns the optimum, the
    parameter variances/covariance from the inverse normal matrix, the
    chi-squared at the optimum with nu = n - 2, and the weighted R²
    against the weighted-mean-only null model.
    """
    points = list(points)
    n = len(points)
    if n < 2:
        raise DegenerateFitError(f"need at least 2 points, got {n}")
    x = np.array([p.x for p in points], dtype=np.float64)
    y = np.array([p.y for p in points], dtype=np.float64)
    sig = np.array([p.sigma_y for p in points], dtype=np.float64)
    w = 1.0 / (sig * sig)

    s = w.sum()
    sx = (w * x).sum()
    sy = (w * y).sum()
    sxx = (w * x * x).sum()
    sxy = (w * x * y).sum()
    det = s * sxx - sx * sx
    if det <= _DEGENERATE_RTOL * s * sxx or not np.isfinite(det):
        raise DegenerateFitError("all x values coincide; slope is undetermined")

    m = (s * sxy - sx * sy) / det
    b = (sxx * sy - sx * sxy) / det
    resid = y - (m * x + b)
    chi2 = float((w * resid * resid).sum())
    nu = n - 2
    chi2_red = chi2 / nu if nu > 0 else math.nan
    ybar = sy / s
    chi2_null = float((w * (y - ybar) ** 2).sum())
    if chi2_null > 0:
        r2 = 1.0 - chi2 / chi2_null
    else:
        r2 = 1.0  # all y identical and fit exact
    return CalibrationFit(
        m=float(m),
        b=float(b),
        sigma_m=math.sqrt(s / det),
        sigma_b=math.sqrt(sxx / det),
        cov_mb=float(-sx / det),
        chi2=chi2,
        nu=nu,
        chi2_red=chi2_red,
        r2=r2,
        n_points=n,
    )


def predict_ser(fit: CalibrationFit, v_wlvm: float) -> Prediction:
    """Evaluate the fitted line at ``v_wlvm`` (volts) with propagated
    fit-parameter uncertainty.

    A negative predicted SER is physically impossible; the value is still
    returned and flagged via ``Prediction.below_physical_floor``.
    """
    ser = fit.m * v_wlvm + fit.b
    var = (v_wlvm * v_wlvm * fit.sigma_m ** 2
           + fit.sigma_b ** 2
           + 2.0 * v_wlvm * fit.cov_mb)
    return Prediction(ser=float(ser), sigma=math.sqrt(max(var, 0.0)))


def build_weighted_points(
    pairs: Iterable[tuple[SerMeasurement, SweepResult]],
    v_dd_mv: float,
    weight_mode: str = "combined",
    default_geom_unc: float = DEFAULT_GEOM_UNC,
) -> list[WeightedPoint]:
    """Turn (SER measurement, margin sweep) pairs into fit points.

    x is the word-line voltage margin in volts, y the SER in µSEU per
    bit-second, sigma_y the SER scaled by the selected relative
    uncertainty recipe.  Margin uncertainty is neglected.
    """
    points = []
    for meas, sweep in pairs:
        margin_mv = word_line_voltage_margin(v_dd_mv, sweep.mu)
        stat = meas.rel_stat_unc
        geom = meas.rel_geom_unc if meas.rel_geom_unc is not None else default_geom_unc
        rel = _rel_uncertainty(stat, geom, weight_mode)
        points.append(WeightedPoint(x=margin_mv / 1000.0, y=meas.ser,
                                    sigma_y=meas.ser * rel))
    return points


def calibrate_parts(
    pairs: Iterable[tuple[SerMeasurement, SweepResult]],
    v_dd_mv: float,
    weight_mode: str = "combined",
    default_geom_unc: float = DEFAULT_GEOM_UNC,
) -> CalibrationFit:
    """Weighted line fit over all (measurement, sweep) pairs of the parts."""
    points = build_weighted_points(pairs, v_dd_mv, weight_mode, default_geom_unc)
    fit = weighted_linfit(points)
    return replace(fit, weight_mode=weight_mode)
