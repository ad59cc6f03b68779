"""Shape estimation, shrinkage calibration, and interval prediction.

The band construction runs in two stages. Stage one picks nonnegative
aggregation weights ``alpha`` over the candidate bank by a covering LP:
minimize the average candidate combination on the objective sample
subject to dominating every squared residual on the constraint sample
(optionally relaxed through a hinge budget). Stage two rescales the
resulting shape by the smallest multiplier ``lambda_hat`` whose weighted
empirical miscoverage on a held-out calibration block stays within the
target level. Prediction returns ``center(x) +- sqrt(lambda_hat * shape(x))``,
with covariates routed through a fitted density-ratio reweighting or an
affine transport map depending on the pipeline.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .candidates import (
    CandidateBank,
    CandidateSpec,
    KnnMean,
    ResidualSet,
    default_bank_specs,
    fit_candidate_set,
    fit_mean,
    residuals,
)
from .dataset import DataTable, SplitSpec, split
from .densratio import DensityRatioModel, eval_ratio, fit_density_ratio
from .errors import (
    DimensionMismatch,
    PiaggError,
    ShapeInfeasible,
    ShrinkExceedsOneWarning,
    ShrinkUnbounded,
)
from .linprog import INFEASIBLE, OPTIMAL, UNBOUNDED, LinearProgram, solve_lp
from .numerics import LinearModel
from .transport import AffineMap, apply_map, fit_affine_transport

MODE_COV_EXACT = "cov_shift_exact"
MODE_COV_HINGE = "cov_shift_hinge"
MODE_SOURCE = "source_exact"


@dataclass(frozen=True)
class ShapeModel:
    """Nonnegative aggregation weights with the constraint regime that
    produced them."""

    alpha: np.ndarray
    mode: str
    delta: float | None = None
    epsilon: float | None = None
    support_threshold: float = 0.0
    objective_value: float = float("nan")

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=np.float64).ravel()
        if np.any(alpha < 0):
            raise ValueError("alpha must be nonnegative")
        object.__setattr__(self, "alpha", alpha)
        if self.mode == MODE_COV_HINGE and (self.delta is None or self.delta <= 0):
            raise ValueError("hinge mode requires delta > 0")


@dataclass(frozen=True)
class ShrinkResult:
    lambda_hat: float
    achieved_violation: float
    lambda_exceeds_one: bool


@dataclass(frozen=True)
class IntervalBatch:
    """Per-point prediction intervals; lower <= center <= upper."""

    lower: np.ndarray
    upper: np.ndarray
    center: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=np.float64).ravel()
        up = np.asarray(self.upper, dtype=np.float64).ravel()
        ce = np.asarray(self.center, dtype=np.float64).ravel()
        if not (lo.shape == up.shape == ce.shape):
            raise DimensionMismatch("interval vectors must share a length")
        finite = np.isfinite(lo) & np.isfinite(up)
        if np.any(lo[finite] > ce[finite]) or np.any(ce[finite] > up[finite]):
            raise ValueError("intervals must satisfy lower <= center <= upper")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)
        object.__setattr__(self, "center", ce)

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower


@dataclass(frozen=True)
class PiModel:
    """Fitted interval constructor.

    ``adapter`` is a DensityRatioModel for the reweighting pipeline, an
    AffineMap for the transport pipeline, or None when no shift
    adjustment applies.
    """

    shape: ShapeModel
    bank: CandidateBank
    mean_model: object
    shrink: ShrinkResult
    alpha_level: float
    adapter: object | None
    alg2_delta: float = 0.0
    floor: float = 0.0
    holdout_violation: float = float("nan")


def _solve_covering_dual(phi: np.ndarray, r2: np.ndarray, obj: np.ndarray,
                         feas_tol: float) -> np.ndarray | None:
    """Recover the covering-LP weights from its dual.

    Primal: min obj@alpha s.t. phi@alpha >= r2, alpha >= 0.
    Dual:   max r2@y     s.t. phi.T@y <= obj,  y >= 0.

    The dual has only n_candidates rows, so the dense simplex stays small
    even when the constraint sample is large. The primal point comes from
    complementary slackness (solve the tight system) and is verified
    against the primal constraints and strong duality; on any doubt the
    caller falls back to solving the primal directly.
    """
    n, k = phi.shape
    dual = LinearProgram(-r2, phi.T, obj, np.ones(n, dtype=bool))
    sol = solve_lp(dual, feas_tol=feas_tol, max_pivots=200 * (n + k))
    if sol.status == UNBOUNDED:
        raise ShapeInfeasible("no nonnegative combination covers every constrained row")
    if sol.status != OPTIMAL:
        return None
    y = sol.x
    dual_value = float(r2 @ y)
    slack = obj - phi.T @ y
    tight = slack <= 1e-7 * max(1.0, float(np.max(np.abs(obj))))
    active = y > 1e-9 * max(1.0, float(np.max(y)) if n else 1.0)
    alpha = np.zeros(k)
    if np.any(tight) and np.any(active):
        sub = phi[np.ix_(active, tight)]
        target = r2[active]
        coef, *_ = np.linalg.lstsq(sub, target, rcond=None)
        alpha[tight] = coef
    if np.any(alpha < -1e-8):
        return None
    alpha = np.maximum(alpha, 0.0)
    # the returned weights must satisfy the covering constraints to the
    # same tolerance the direct primal solve would guarantee
    scale = max(1.0, float(np.max(r2)) if n else 1.0)
    if np.any(phi @ alpha < r2 - feas_tol * scale):
        return None
    value = float(obj @ alpha)
    if abs(value - dual_value) > 1e-6 * max(1.0, abs(dual_value)):
        return None
    return alpha


def _solve_covering_primal(phi: np.ndarray, r2: np.ndarray, obj: np.ndarray,
                           feas_tol: float) -> np.ndarray:
    n, k = phi.shape
    prog = LinearProgram(obj, -phi, -r2, np.ones(k, dtype=bool))
    sol = solve_lp(prog, feas_tol=feas_tol, max_pivots=200 * (n + k))
    if sol.status == INFEASIBLE:
        raise ShapeInfeasible("no nonnegative combination covers every constrained row")
    if sol.status != OPTIMAL:
        raise PiaggError(f"covering LP ended with status {sol.status}")
    return np.maximum(sol.x, 0.0)


def _solve_covering(phi: np.ndarray, r2: np.ndarray, obj: np.ndarray,
                    feas_tol: float) -> np.ndarray:
    if phi.shape[0] == 0:
        return np.zeros(phi.shape[1])
    alpha = _solve_covering_dual(phi, r2, obj, feas_tol)
    if alpha is None:
        alpha = _solve_covering_primal(phi, r2, obj, feas_tol)
    return alpha


def fit_shape_cov_shift(bank: CandidateBank, r: ResidualSet,
                        weights_on_source: np.ndarray, mode: str = "exact",
                        delta: float | None = None, epsilon: float | None = None,
                        support_threshold: float = 0.0,
                        feas_tol: float = 1e-9) -> ShapeModel:
    """Shape weights under covariate shift.

    Exact mode enforces coverage on every source row whose estimated
    ratio exceeds ``support_threshold``; hinge mode replaces the hard
    constraints with slacks whose ratio-weighted mean hinge loss must stay
    within ``epsilon`` (delta is the hinge scale). The objective is always
    the average combined candidate on the target covariates.
    """
    if bank.phi_target is None:
        raise PiaggError("bank must carry target evaluations for the covariate-shift fit")
    w = np.asarray(weights_on_source, dtype=np.float64).ravel()
    phi = bank.phi_source
    r2 = r.r2
    if w.shape[0] != phi.shape[0] or r2.shape[0] != phi.shape[0]:
        raise DimensionMismatch("weights, residuals and bank evaluations must align")
    obj = bank.phi_target.mean(axis=0)
    if mode == "exact":
        keep = w > support_threshold
        alpha = _solve_covering(phi[keep], r2[keep], obj, feas_tol)
        return ShapeModel(alpha, MODE_COV_EXACT, delta, epsilon, support_threshold,
                          float(obj @ alpha))
    if mode != "hinge":
        raise ValueError("mode must be 'exact' or 'hinge'")
    if delta is None or delta <= 0:
        raise ValueError("hinge mode requires delta > 0")
    if epsilon is None or epsilon < 0:
        raise ValueError("hinge mode requires epsilon >= 0")
    n_all = phi.shape[0]
    keep = w > 0
    phi_k, r2_k, w_k = phi[keep], r2[keep], w[keep]
    n_k = phi_k.shape[0]
    k = phi.shape[1]
    # variables [alpha, s]; rows: delta-scaled hinge dominations + budget
    n_var = k + n_k
    lhs = np.zeros((n_k + 1, n_var))
    lhs[:n_k, :k] = -phi_k
    lhs[:n_k, k:] = -delta * np.eye(n_k)
    rhs = np.concatenate([-(r2_k + delta), [n_all * epsilon]])
    lhs[n_k, k:] = w_k
    c = np.concatenate([obj, np.zeros(n_k)])
    prog = LinearProgram(c, lhs, rhs, np.ones(n_var, dtype=bool))
    sol = solve_lp(prog, feas_tol=feas_tol, max_pivots=200 * (n_k + n_var))
    if sol.status == INFEASIBLE:
        raise ShapeInfeasible("hinge budget cannot be met by any candidate combination")
    if sol.status != OPTIMAL:
        raise PiaggError(f"hinge LP ended with status {sol.status}")
    alpha = np.maximum(sol.x[:k], 0.0)
    return ShapeModel(alpha, MODE_COV_HINGE, delta, epsilon, support_threshold,
                      float(obj @ alpha))


def fit_shape_source(bank: CandidateBank, r: ResidualSet,
                     feas_tol: float = 1e-9) -> ShapeModel:
    """Shape weights on the source alone: cover every squared residual
    while minimizing the average combined candidate on the same block."""
    phi = bank.phi_source
    if r.r2.shape[0] != phi.shape[0]:
        raise DimensionMismatch("residuals and bank evaluations must align")
    obj = phi.mean(axis=0) if phi.shape[0] else np.zeros(phi.shape[1])
    alpha = _solve_covering(phi, r.r2, obj, feas_tol)
    return ShapeModel(alpha, MODE_SOURCE, None, None, 0.0, float(obj @ alpha))


def hinge_constraint_value(shape: ShapeModel, bank: CandidateBank, r: ResidualSet,
                           weights_on_source: np.ndarray) -> float:
    """Directly evaluated hinge budget of a fitted shape: the weighted
    mean of max(0, (r2 - f)/delta + 1) over the constraint block."""
    if shape.delta is None or shape.delta <= 0:
        raise ValueError("shape has no hinge scale")
    f = bank.phi_source @ shape.alpha
    hinge = np.maximum(0.0, (r.r2 - f) / shape.delta + 1.0)
    w = np.asarray(weights_on_source, dtype=np.float64).ravel()
    return float(np.mean(w * hinge))


def _scan_thresholds(thresholds: np.ndarray, weights: np.ndarray,
                     permanent_mass: float, n: int,
                     alpha_level: float) -> tuple[float, float]:
    """Smallest candidate multiplier whose miscoverage budget holds.

    The budget at a candidate value c is the weight of rows whose
    threshold is strictly greater than c (plus any permanent mass),
    divided by n. Under the strict violation rule (r2 > lam * f) this is
    exactly the miscoverage at lam = c and the infimum is attained; under
    the non-strict rule (r2 >= lam * denom) it is the limit from above,
    so the returned value is the infimum of the feasible ray and the
    reported violation is measured just past it.
    """
    t_sorted = np.sort(thresholds, kind="stable")
    w_sorted = weights[np.argsort(thresholds, kind="stable")]
    total = float(w_sorted.sum())
    cum = np.cumsum(w_sorted) if w_sorted.size else np.zeros(0)

    def mass_above(value: float) -> float:
        pos = int(np.searchsorted(t_sorted, value, side="right"))
        if pos == 0:
            return total
        return total - float(cum[pos - 1])

    uniq = np.unique(t_sorted)
    candidates = np.concatenate([[0.0], uniq[uniq > 0.0]])
    masses = np.array([mass_above(c) for c in candidates])
    violations = (permanent_mass + masses) / n
    feasible = violations <= alpha_level
    if not np.any(feasible):
        # only possible with permanent mass: some rows violate at every lam
        raise ShrinkUnbounded("miscoverage budget cannot be met at any finite multiplier")
    idx = int(np.argmax(feasible))
    return float(candidates[idx]), float(violations[idx])


def shrink_cov_shift(f_hat_cal: np.ndarray, r2_cal: np.ndarray, w_cal: np.ndarray,
                     alpha_level: float, floor: float = 0.0,
                     normalize_weights: bool = False) -> ShrinkResult:
    """Smallest multiplier lam with ratio-weighted empirical miscoverage
    (1/n) sum w * 1{r2 > lam * f} at most ``alpha_level``.

    Violations use the strict inequality, so the infimum is attained at a
    threshold r2_i / f_i and the reported ``achieved_violation`` is the
    budget value at the returned multiplier. ``floor`` lifts tiny shape
    values before thresholds are formed; with a zero floor, rows where
    the shape vanishes but the residual does not violate at every
    multiplier, and the fit is reported unbounded when their weighted
    mass exceeds the budget. Setting ``normalize_weights`` rescales the
    weights to mean one first (a self-normalized variant; the default
    follows the plain weighted mean).
    """
    f = np.asarray(f_hat_cal, dtype=np.float64).ravel()
    r2 = np.asarray(r2_cal, dtype=np.float64).ravel()
    w = np.asarray(w_cal, dtype=np.float64).ravel()
    if not (f.shape == r2.shape == w.shape):
        raise DimensionMismatch("calibration vectors must share a length")
    if f.size == 0:
        raise PiaggError("calibration set is empty")
    if floor < 0:
        raise ValueError("floor must be nonnegative")
    n = f.size
    if normalize_weights:
        mean_w = w.mean()
        if mean_w <= 0:
            raise ValueError("weights must have positive mean to normalize")
        w = w / mean_w
    f = np.maximum(f, floor)
    permanent = (f <= 0.0) & (r2 > 0.0)
    permanent_mass = float(w[permanent].sum())
    ok = ~permanent
    thresholds = np.zeros(n)
    pos = ok & (f > 0.0)
    thresholds[pos] = r2[pos] / f[pos]
    lam, violation = _scan_thresholds(thresholds[ok], w[ok], permanent_mass,
                                      n, alpha_level)
    return ShrinkResult(lam, violation, lam > 1.0)


def shrink_source(f_hat_cal: np.ndarray, r2_cal: np.ndarray,
                  alpha_level: float, alg2_delta: float) -> ShrinkResult:
    """Source-domain shrink level with the non-strict convention:
    inf{lam > 0 : (1/n) sum 1{r2 >= lam (f + delta)} <= alpha_level}.

    Because a row counts as violating exactly at its own threshold, the
    infimum may not be attained; the scan returns the limit value (the
    smallest threshold whose strictly-above mass meets the budget) and
    reports the violation measured just above it.
    """
    f = np.asarray(f_hat_cal, dtype=np.float64).ravel()
    r2 = np.asarray(r2_cal, dtype=np.float64).ravel()
    if f.shape != r2.shape:
        raise DimensionMismatch("calibration vectors must share a length")
    if f.size == 0:
        raise PiaggError("calibration set is empty")
    n = f.size
    denom = f + alg2_delta
    permanent = denom <= 0.0
    permanent_mass = float(np.count_nonzero(permanent))
    ok = ~permanent
    thresholds = r2[ok] / denom[ok]
    lam, violation = _scan_thresholds(thresholds, np.ones(thresholds.size),
                                      permanent_mass, n, alpha_level)
    return ShrinkResult(lam, violation, lam > 1.0)


def predict_interval(m: PiModel, x: np.ndarray) -> IntervalBatch:
    """Centered intervals ``mean(z) +- sqrt(lam * shape(z))`` where z is x
    routed through the transport map when one is attached."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    z = apply_map(m.adapter, x) if isinstance(m.adapter, AffineMap) else x
    center = np.asarray(m.mean_model.predict(z), dtype=np.float64).ravel()
    f = m.bank.evaluate(z) @ m.shape.alpha
    if m.shape.mode == MODE_SOURCE:
        scaled = m.shrink.lambda_hat * (f + m.alg2_delta)
    else:
        scaled = m.shrink.lambda_hat * np.maximum(f, m.floor)
    half = np.sqrt(np.maximum(scaled, 0.0))
    return IntervalBatch(center - half, center + half, center)


@dataclass(frozen=True)
class DiagnosticReport:
    lambda_hat: float
    lambda_exceeds_one: bool
    achieved_violation: float
    holdout_violation: float

    def to_dict(self) -> dict:
        return {"lambda_hat": self.lambda_hat,
                "lambda_exceeds_one": self.lambda_exceeds_one,
                "achieved_violation": self.achieved_violation,
                "holdout_violation": self.holdout_violation}


def diagnose(m: PiModel) -> DiagnosticReport:
    """Calibration diagnostics; warns when the shrink level exceeds one,
    i.e. the calibration step had to widen the fitted shape."""
    if m.shrink.lambda_exceeds_one:
        warnings.warn(
            f"shrink level {m.shrink.lambda_hat:.4g} exceeds 1; the shape is being widened",
            ShrinkExceedsOneWarning, stacklevel=2)
    return DiagnosticReport(m.shrink.lambda_hat, m.shrink.lambda_exceeds_one,
                            m.shrink.achieved_violation, m.holdout_violation)


def _as_target_matrix(target) -> np.ndarray:
    if isinstance(target, DataTable):
        return target.x
    return np.atleast_2d(np.asarray(target, dtype=np.float64))


def fit_covariate_shift(source: DataTable, target_x, alpha_level: float, *,
                        specs: list[CandidateSpec] | None = None,
                        fractions: tuple[float, float, float] = (0.5, 0.25, 0.25),
                        seed: int = 0, mode: str = "exact",
                        delta: float | None = None, epsilon: float | None = None,
                        support_threshold: float = 0.0,
                        mean_method: str = "ols", mean_k: int = 10,
                        ratio_ridge: float = 1e-6, prob_clip: float = 1e-6,
                        ratio_cap: float = 1e3,
                        weight_fn=None, floor: float | None = None,
                        normalize_weights: bool = False,
                        feas_tol: float = 1e-9) -> PiModel:
    """Full reweighting pipeline: fit nuisances on the first block, the
    shape LP on the second (with target covariates in the objective), and
    the shrink level on the third.

    ``weight_fn`` replaces the fitted density ratio with a known one
    (a callable on covariate matrices); the fitted classifier is skipped
    entirely in that case. Target labels, if present, are ignored.
    """
    if not 0.0 < alpha_level < 1.0:
        raise ValueError("alpha_level must lie in (0, 1)")
    tx = _as_target_matrix(target_x)
    if specs is None:
        specs = default_bank_specs()
    d1, d21, d22 = split(source, SplitSpec(tuple(fractions), seed))
    mean_model = fit_mean(d1, mean_method, mean_k)
    r1 = residuals(d1, mean_model)
    bank = fit_candidate_set(d1, r1, specs)
    phi_target = bank.evaluate(tx)

    if weight_fn is not None:
        adapter = None
        w21 = np.asarray(weight_fn(d21.x), dtype=np.float64).ravel()
        w22 = np.asarray(weight_fn(d22.x), dtype=np.float64).ravel()
    else:
        adapter = fit_density_ratio(d1.x, tx, ridge=ratio_ridge,
                                    prob_clip=prob_clip, ratio_cap=ratio_cap)
        w21 = eval_ratio(adapter, d21.x)
        w22 = eval_ratio(adapter, d22.x)

    r21 = residuals(d21, mean_model)
    bank21 = CandidateBank(list(bank.specs), list(bank.fitted),
                           bank.evaluate(d21.x), phi_target)
    if mode == "hinge":
        if delta is None:
            delta = 0.1 * float(np.quantile(r21.r2, 0.9))
            delta = max(delta, 1e-12)
        if epsilon is None:
            epsilon = 0.01
    shape = fit_shape_cov_shift(bank21, r21, w21, mode=mode, delta=delta,
                                epsilon=epsilon, support_threshold=support_threshold,
                                feas_tol=feas_tol)

    r22 = residuals(d22, mean_model)
    f22 = bank.evaluate(d22.x) @ shape.alpha
    if floor is None:
        floor = 1e-9 * max(float(np.max(r22.r2, initial=0.0)), 1.0)
    shrink = shrink_cov_shift(f22, r22.r2, w22, alpha_level, floor=floor,
                              normalize_weights=normalize_weights)
    holdout = float(np.mean(r22.r2 > shrink.lambda_hat * np.maximum(f22, floor)))
    return PiModel(shape, bank, mean_model, shrink, alpha_level, adapter,
                   alg2_delta=0.0, floor=floor, holdout_violation=holdout)


def fit_transport(source: DataTable, target_x=None, alpha_level: float = 0.05, *,
                  specs: list[CandidateSpec] | None = None,
                  fractions: tuple[float, float, float] = (0.5, 0.25, 0.25),
                  seed: int = 0, transport_mode: str = "gaussian_ot",
                  cov_ridge: float = 0.0, alg2_delta: float | None = None,
                  transport_map: AffineMap | None = None,
                  mean_method: str = "ols", mean_k: int = 10,
                  feas_tol: float = 1e-9) -> PiModel:
    """Transport pipeline: build the band on the source alone, then carry
    it to the target through an affine map fitted from target covariates
    to the first source block (or a map supplied directly).

    With no target covariates and no explicit map this degenerates to the
    unshifted source pipeline whose intervals are used as-is.
    """
    if not 0.0 < alpha_level < 1.0:
        raise ValueError("alpha_level must lie in (0, 1)")
    if specs is None:
        specs = default_bank_specs()
    d1, d21, d22 = split(source, SplitSpec(tuple(fractions), seed))
    mean_model = fit_mean(d1, mean_method, mean_k)
    r1 = residuals(d1, mean_model)
    bank = fit_candidate_set(d1, r1, specs)

    if transport_map is not None:
        adapter: AffineMap | None = transport_map
    elif target_x is not None:
        adapter = fit_affine_transport(_as_target_matrix(target_x), d1.x,
                                       mode=transport_mode, cov_ridge=cov_ridge)
    else:
        adapter = None

    r21 = residuals(d21, mean_model)
    bank21 = CandidateBank(list(bank.specs), list(bank.fitted),
                           bank.evaluate(d21.x), None)
    shape = fit_shape_source(bank21, r21, feas_tol=feas_tol)

    r22 = residuals(d22, mean_model)
    f22 = bank.evaluate(d22.x) @ shape.alpha
    if alg2_delta is None:
        alg2_delta = 0.01 * float(np.quantile(r21.r2, 0.9))
        alg2_delta = max(alg2_delta, 1e-12)
    shrink = shrink_source(f22, r22.r2, alpha_level, alg2_delta)
    holdout = float(np.mean(r22.r2 >= shrink.lambda_hat * (f22 + alg2_delta)))
    return PiModel(shape, bank, mean_model, shrink, alpha_level, adapter,
                   alg2_delta=alg2_delta, floor=0.0, holdout_violation=holdout)


# ---------------------------------------------------------------------------
# Serialization. Plain JSON with full-precision floats: Python's float repr
# round-trips bit-exactly, so saving and loading preserves every real field.
# ---------------------------------------------------------------------------

def _mean_model_state(model) -> dict:
    if isinstance(model, LinearModel):
        return {"kind": "ols", "coefficients": model.coefficients.tolist()}
    if isinstance(model, KnnMean):
        return {"kind": "knn", "train_x": model.train_x.tolist(),
                "train_y": model.train_y.tolist(), "k": model.k}
    raise PiaggError(f"cannot serialize mean model {type(model).__name__}")


def _mean_model_from_state(d: dict):
    if d["kind"] == "ols":
        return LinearModel(np.asarray(d["coefficients"], float), "ols_mean")
    if d["kind"] == "knn":
        return KnnMean(np.asarray(d["train_x"], float),
                       np.asarray(d["train_y"], float), d["k"])
    raise PiaggError(f"unknown mean model kind '{d['kind']}'")


def _adapter_state(adapter) -> tuple[str, dict | None]:
    if adapter is None:
        return "none", None
    if isinstance(adapter, DensityRatioModel):
        return "ratio", {
            "coefficients": adapter.classifier.coefficients.tolist(),
            "n_source": adapter.n_source, "n_target": adapter.n_target,
            "prob_clip": adapter.prob_clip, "ratio_cap": adapter.ratio_cap}
    if isinstance(adapter, AffineMap):
        return "map", {"a": adapter.a.tolist(), "b": adapter.b.tolist(),
                       "mode": adapter.mode}
    raise PiaggError(f"cannot serialize adapter {type(adapter).__name__}")


def _adapter_from_state(kind: str, d: dict | None):
    if kind == "none":
        return None
    if kind == "ratio":
        clf = LinearModel(np.asarray(d["coefficients"], float), "logistic")
        return DensityRatioModel(clf, d["n_source"], d["n_target"],
                                 d["prob_clip"], d["ratio_cap"])
    if kind == "map":
        return AffineMap(np.asarray(d["a"], float), np.asarray(d["b"], float), d["mode"])
    raise PiaggError(f"unknown adapter kind '{kind}'")


def model_to_dict(m: PiModel) -> dict:
    adapter_kind, adapter_state = _adapter_state(m.adapter)
    return {
        "format": "piagg-model-v1",
        "alpha_level": m.alpha_level,
        "mode": m.shape.mode,
        "alpha": m.shape.alpha.tolist(),
        "shape_objective": m.shape.objective_value,
        "delta": m.shape.delta,
        "epsilon": m.shape.epsilon,
        "support_threshold": m.shape.support_threshold,
        "lambda_hat": m.shrink.lambda_hat,
        "achieved_violation": m.shrink.achieved_violation,
        "lambda_exceeds_one": m.shrink.lambda_exceeds_one,
        "holdout_violation": m.holdout_violation,
        "floor": m.floor,
        "alg2_delta": m.alg2_delta,
        "mean_model": _mean_model_state(m.mean_model),
        "bank": m.bank.to_state(),
        "adapter_kind": adapter_kind,
        "adapter": adapter_state,
    }


def model_from_dict(d: dict) -> PiModel:
    if d.get("format") != "piagg-model-v1":
        raise PiaggError("not a recognized model document")
    shape = ShapeModel(np.asarray(d["alpha"], float), d["mode"], d["delta"],
                       d["epsilon"], d["support_threshold"], d["shape_objective"])
    shrink = ShrinkResult(d["lambda_hat"], d["achieved_violation"],
                          d["lambda_exceeds_one"])
    return PiModel(shape, CandidateBank.from_state(d["bank"]),
                   _mean_model_from_state(d["mean_model"]), shrink,
                   d["alpha_level"], _adapter_from_state(d["adapter_kind"], d["adapter"]),
                   alg2_delta=d["alg2_delta"], floor=d["floor"],
                   holdout_violation=d["holdout_violation"])


def save_model(m: PiModel, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(m), fh)


def load_model(path: str) -> PiModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))
