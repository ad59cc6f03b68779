"""Weighted split-conformal baselines.

Two score families over a shared weighted-quantile core:

* variance-adjusted (``wvac``): score |y - mean(x)| / scale(x) with a
  kernel estimate of the conditional scale;
* quantile-adjusted (``wqc``): score max(q_lo(x) - y, y - q_hi(x)) from a
  pair of linear quantile fits.

Calibration scores are reweighted by the estimated density ratio, and
each test point contributes a point mass at +infinity, so an interval can
come back infinite when the test weight dominates; such intervals are
flagged through infinite half-widths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .candidates import _KernelVariance, _normal_reference_bandwidth
from .dataset import DataTable
from .densratio import DensityRatioModel, eval_ratio
from .errors import PiaggError
from .numerics import LinearModel, ols_fit, quantile_reg_fit
from .aggregate import IntervalBatch


@dataclass(frozen=True)
class KernelScale:
    """Conditional-scale estimate: square root of a kernel smoother of the
    squared residuals, floored at ``sigma_min``."""

    smoother: _KernelVariance
    sigma_min: float

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.maximum(np.sqrt(np.maximum(self.smoother.evaluate(x), 0.0)),
                          self.sigma_min)


@dataclass(frozen=True)
class WvacModel:
    mean_model: LinearModel
    scale_model: KernelScale
    cal_scores: np.ndarray
    cal_weights: np.ndarray
    ratio: DensityRatioModel | None


@dataclass(frozen=True)
class WqcModel:
    q_lo: LinearModel
    q_hi: LinearModel
    cal_scores: np.ndarray
    cal_weights: np.ndarray
    ratio: DensityRatioModel | None


def _ratio_weights(ratio: DensityRatioModel | None, x: np.ndarray) -> np.ndarray:
    if ratio is None:
        return np.ones(np.atleast_2d(x).shape[0])
    return eval_ratio(ratio, x)


def fit_wvac(train1: DataTable, cal: DataTable, ratio: DensityRatioModel | None,
             sigma_min: float | None = None,
             bandwidth: float | None = None) -> WvacModel:
    """Fit the variance-adjusted conformal pieces: OLS mean and kernel
    scale on the first block, scores and ratio weights on the calibration
    block.

    ``sigma_min`` defaults to 1e-6 times the response scale so the score
    division stays safe when residuals vanish; ``bandwidth`` defaults to
    the normal-reference rule.
    """
    if train1.y is None or cal.y is None:
        raise PiaggError("both blocks must be labeled")
    mean_model = ols_fit(train1.x, train1.y)
    resid2 = (train1.y - mean_model.predict(train1.x)) ** 2
    if bandwidth is None:
        bandwidth = _normal_reference_bandwidth(train1.x)
    if sigma_min is None:
        scale = float(np.std(train1.y))
        sigma_min = 1e-6 * (scale if scale > 0 else 1.0)
    scale_model = KernelScale(_KernelVariance(train1.x.copy(), resid2, bandwidth),
                              sigma_min)
    scores = np.abs(cal.y - mean_model.predict(cal.x)) / scale_model.predict(cal.x)
    return WvacModel(mean_model, scale_model, scores,
                     _ratio_weights(ratio, cal.x), ratio)


def _weighted_eta(cal_scores: np.ndarray, cal_weights: np.ndarray,
                  test_weights: np.ndarray, level: float) -> np.ndarray:
    """Per-test-point weighted score quantile with a +inf atom.

    Each test point sees the calibration scores with their ratio weights
    plus its own weight at +infinity; returns the left-continuous
    quantile at ``level`` of that distribution (np.inf when the finite
    mass cannot reach the level).
    """
    order = np.argsort(cal_scores, kind="stable")
    s_sorted = cal_scores[order]
    cum = np.cumsum(cal_weights[order])
    total_cal = float(cum[-1]) if cum.size else 0.0
    thresholds = level * (total_cal + test_weights)
    idx = np.searchsorted(cum, thresholds, side="left")
    eta = np.full(test_weights.shape[0], np.inf)
    finite = idx < s_sorted.size
    eta[finite] = s_sorted[idx[finite]]
    return eta


def predict_wvac(m: WvacModel, x: np.ndarray, alpha_level: float) -> IntervalBatch:
    """Intervals mean(x) +- scale(x) * eta(x) at coverage 1 - alpha_level;
    eta comes from the weighted calibration-score quantile with the test
    point's own mass at +infinity."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    w_test = _ratio_weights(m.ratio, x)
    eta = _weighted_eta(m.cal_scores, m.cal_weights, w_test, 1.0 - alpha_level)
    center = m.mean_model.predict(x)
    half = m.scale_model.predict(x) * eta
    return IntervalBatch(center - half, center + half, center)


def fit_wqc(train1: DataTable, cal: DataTable, ratio: DensityRatioModel | None,
            alpha_level: float) -> WqcModel:
    """Fit the quantile-adjusted conformal pieces: linear quantile models
    at alpha/2 and 1 - alpha/2, then signed-distance scores on the
    calibration block (crossing fits are swapped pointwise)."""
    if train1.y is None or cal.y is None:
        raise PiaggError("both blocks must be labeled")
    q_lo = quantile_reg_fit(train1.x, train1.y, alpha_level / 2.0)
    q_hi = quantile_reg_fit(train1.x, train1.y, 1.0 - alpha_level / 2.0)
    lo, hi = _ordered_quantiles(q_lo, q_hi, cal.x)
    scores = np.maximum(lo - cal.y, cal.y - hi)
    return WqcModel(q_lo, q_hi, scores, _ratio_weights(ratio, cal.x), ratio)


def _ordered_quantiles(q_lo: LinearModel, q_hi: LinearModel,
                       x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lo = q_lo.predict(x)
    hi = q_hi.predict(x)
    return np.minimum(lo, hi), np.maximum(lo, hi)


def predict_wqc(m: WqcModel, x: np.ndarray, alpha_level: float) -> IntervalBatch:
    """Intervals [q_lo(x) - eta, q_hi(x) + eta]; eta is floored at zero so
    calibration points sitting comfortably inside the quantile band never
    shrink it."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    w_test = _ratio_weights(m.ratio, x)
    eta = _weighted_eta(m.cal_scores, m.cal_weights, w_test, 1.0 - alpha_level)
    eta = np.maximum(eta, 0.0)
    lo, hi = _ordered_quantiles(m.q_lo, m.q_hi, x)
    return IntervalBatch(lo - eta, hi + eta, (lo + hi) / 2.0)
