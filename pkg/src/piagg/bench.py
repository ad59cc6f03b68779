"""Scenario runner, coverage/width metrics, and plot-ready reports.

A scenario document (JSON) names a data source, a covariate shift, a
method list, and Monte-Carlo controls; ``run_scenario`` replays it
deterministically from the base seed, fitting every method on labeled
source data plus target covariates only. Target labels are touched
exclusively by the evaluation step, never by any fit.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .aggregate import fit_covariate_shift, fit_transport, predict_interval
from .candidates import CandidateSpec
from .conformal import fit_wvac, fit_wqc, predict_wvac, predict_wqc
from .dataset import (
    DataTable,
    SplitSpec,
    affine_shift,
    gen_affine_gauss,
    gen_hetero_sim,
    load_csv,
    split,
    tilt_resample,
    weighted_resample,
)
from .densratio import fit_density_ratio
from .errors import ConfigError, LengthMismatch
from .numerics import sigmoid
from .rng import derive_seed

METHOD_NAMES = ("alg1", "alg2", "wvac", "wqc")

DEFAULT_AFFINE_A = np.diag([1.5, 1.2, 1.6, 2.0, 1.8])
DEFAULT_AFFINE_B = np.array([1.0, 0.0, 0.0, 1.0, 0.0])

CSV_COLUMNS = ("rep", "method", "coverage", "avg_width", "lambda_hat",
               "runtime_s", "n_infinite")


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario document; see ``from_dict`` for the schema."""

    data: dict
    shift: dict
    methods: list[dict]
    alpha_level: float
    replications: int
    base_seed: int
    train_fraction: float = 0.75
    fractions: tuple[float, float, float] = (0.5, 0.25, 0.25)
    target_size: int | None = None
    out_dir: str | None = None

    @classmethod
    def from_dict(cls, doc: dict) -> "ScenarioConfig":
        def need(d: dict, key: str, path: str):
            if key not in d:
                raise ConfigError(f"{path}.{key}: missing required field")
            return d[key]

        data = need(doc, "data", "config")
        kind = need(data, "kind", "config.data")
        gen = None
        if kind == "synthetic":
            gen = need(data, "generator", "config.data")
            if gen not in ("hetero1d", "affine_gauss"):
                raise ConfigError(f"config.data.generator: unknown generator '{gen}'")
            need(data, "n", "config.data")
        elif kind == "csv":
            need(data, "path", "config.data")
        else:
            raise ConfigError(f"config.data.kind: unknown kind '{kind}'")

        shift = doc.get("shift", {"kind": "none"})
        skind = need(shift, "kind", "config.shift")
        if gen == "affine_gauss" and skind != "none":
            raise ConfigError("config.shift.kind: affine_gauss generates paired "
                              "source/target tables; shift must be 'none'")
        if skind in ("tilt", "sigmoid"):
            need(shift, "beta", "config.shift")
        elif skind == "affine":
            need(shift, "a", "config.shift")
            need(shift, "b", "config.shift")
        elif skind != "none":
            raise ConfigError(f"config.shift.kind: unknown kind '{skind}'")

        methods = need(doc, "methods", "config")
        if not isinstance(methods, list) or not methods:
            raise ConfigError("config.methods: must be a non-empty list")
        for i, m in enumerate(methods):
            name = need(m, "name", f"config.methods[{i}]")
            if name not in METHOD_NAMES:
                raise ConfigError(f"config.methods[{i}].name: unknown method '{name}'")

        alpha = float(need(doc, "alpha_level", "config"))
        if not 0.0 < alpha < 1.0:
            raise ConfigError("config.alpha_level: must lie in (0, 1)")
        reps = int(need(doc, "replications", "config"))
        if reps < 1:
            raise ConfigError("config.replications: must be at least 1")
        return cls(
            data=data, shift=shift, methods=methods, alpha_level=alpha,
            replications=reps, base_seed=int(need(doc, "base_seed", "config")),
            train_fraction=float(doc.get("train_fraction", 0.75)),
            fractions=tuple(doc.get("fractions", (0.5, 0.25, 0.25))),
            target_size=doc.get("target_size"),
            out_dir=doc.get("out_dir"),
        )


@dataclass(frozen=True)
class RepResult:
    rep: int
    method: str
    coverage: float
    avg_width: float
    lambda_hat: float | None
    runtime_s: float
    n_infinite: int


@dataclass
class RunSummary:
    rows: list[RepResult] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)

    def methods(self) -> list[str]:
        seen: list[str] = []
        for r in self.rows:
            if r.method not in seen:
                seen.append(r.method)
        return seen

    def metric(self, method: str, name: str) -> np.ndarray:
        vals = [getattr(r, name) for r in self.rows if r.method == method]
        return np.array([v for v in vals if v is not None], dtype=np.float64)

    def aggregates(self) -> dict:
        out: dict = {}
        for method in self.methods():
            entry = {}
            for name in ("coverage", "avg_width", "lambda_hat", "runtime_s"):
                vals = self.metric(method, name)
                if vals.size == 0:
                    continue
                entry[name] = {
                    "median": float(np.median(vals)),
                    "iqr": float(np.quantile(vals, 0.75) - np.quantile(vals, 0.25)),
                    "mean": float(np.mean(vals)),
                    "sd": float(np.std(vals, ddof=1)) if vals.size > 1 else 0.0,
                }
            out[method] = entry
        return out


def coverage_and_width(intervals, y: np.ndarray) -> tuple[float, float]:
    """Fraction of labels inside their interval and the mean finite width.

    Infinite intervals count as covered; their widths are excluded from
    the mean (the caller can tally them from the interval widths).
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.shape[0] != intervals.lower.shape[0]:
        raise LengthMismatch("labels and intervals differ in length")
    covered = (intervals.lower <= y) & (y <= intervals.upper)
    width = intervals.width
    finite = np.isfinite(width)
    avg_width = float(np.mean(width[finite])) if np.any(finite) else float("nan")
    return float(np.mean(covered)), avg_width


def _parse_specs(method_cfg: dict) -> list[CandidateSpec] | None:
    if "candidates" not in method_cfg:
        return None
    return [CandidateSpec.from_dict(d) for d in method_cfg["candidates"]]


def _run_method(method_cfg: dict, train: DataTable, target_x: np.ndarray,
                alpha_level: float, fractions: tuple[float, float, float],
                seed: int) -> tuple[object, float | None]:
    """Fit one method and predict on the target covariates.

    Returns (intervals, lambda_hat). Target labels never reach this
    function; its signature only admits the covariate matrix.
    """
    name = method_cfg["name"]
    if name == "alg1":
        model = fit_covariate_shift(
            train, target_x, alpha_level,
            specs=_parse_specs(method_cfg),
            fractions=tuple(method_cfg.get("fractions", fractions)),
            seed=seed,
            mode=method_cfg.get("mode", "exact"),
            delta=method_cfg.get("delta"),
            epsilon=method_cfg.get("epsilon"),
            support_threshold=method_cfg.get("support_threshold", 0.0),
            ratio_cap=method_cfg.get("ratio_cap", 1e3),
            prob_clip=method_cfg.get("prob_clip", 1e-6),
            normalize_weights=method_cfg.get("normalize_weights", False),
        )
        return predict_interval(model, target_x), model.shrink.lambda_hat
    if name == "alg2":
        model = fit_transport(
            train, target_x, alpha_level,
            specs=_parse_specs(method_cfg),
            fractions=tuple(method_cfg.get("fractions", fractions)),
            seed=seed,
            transport_mode=method_cfg.get("transport_mode", "gaussian_ot"),
            cov_ridge=method_cfg.get("cov_ridge", 0.0),
            alg2_delta=method_cfg.get("alg2_delta"),
        )
        return predict_interval(model, target_x), model.shrink.lambda_hat
    if name in ("wvac", "wqc"):
        train1, cal = split(train, SplitSpec((0.5, 0.5), seed))
        ratio = fit_density_ratio(train1.x, target_x,
                                  ridge=method_cfg.get("ratio_ridge", 1e-6),
                                  prob_clip=method_cfg.get("prob_clip", 1e-6),
                                  ratio_cap=method_cfg.get("ratio_cap", 1e3))
        if name == "wvac":
            model = fit_wvac(train1, cal, ratio,
                             sigma_min=method_cfg.get("sigma_min"),
                             bandwidth=method_cfg.get("bandwidth"))
            return predict_wvac(model, target_x, alpha_level), None
        model = fit_wqc(train1, cal, ratio, alpha_level)
        return predict_wqc(model, target_x, alpha_level), None
    raise ConfigError(f"unknown method '{name}'")


def _make_rep_data(cfg: ScenarioConfig, seed: int,
                   csv_cache: dict) -> tuple[DataTable, DataTable]:
    """Source table plus labeled target table for one replication; the
    target labels exist for evaluation only."""
    data = cfg.data
    if data["kind"] == "synthetic" and data["generator"] == "affine_gauss":
        a = np.asarray(data.get("a", DEFAULT_AFFINE_A), dtype=np.float64)
        b = np.asarray(data.get("b", DEFAULT_AFFINE_B), dtype=np.float64)
        n = int(data["n"])
        n_target = int(data.get("n_target", max(n // 4, 1)))
        return gen_affine_gauss(n, n_target, a, b, derive_seed(seed, 1),
                                noise_scale=float(data.get("noise_scale", 1.0)))

    if data["kind"] == "synthetic":
        table = gen_hetero_sim(int(data["n"]), derive_seed(seed, 1))
    else:
        key = (data["path"], data.get("label_column"))
        if key not in csv_cache:
            csv_cache[key] = load_csv(data["path"], data.get("label_column"))
        table = csv_cache[key]

    train, held = split(table, SplitSpec((cfg.train_fraction, 1.0 - cfg.train_fraction),
                                         derive_seed(seed, 2)))
    shift = cfg.shift
    m = cfg.target_size if cfg.target_size is not None else held.n
    if shift["kind"] == "none":
        target = held
    elif shift["kind"] == "tilt":
        target = tilt_resample(held, np.asarray(shift["beta"], float), m,
                               derive_seed(seed, 3))
    elif shift["kind"] == "sigmoid":
        w = sigmoid(held.x @ np.asarray(shift["beta"], float))
        target = weighted_resample(held, w, m, derive_seed(seed, 3))
    elif shift["kind"] == "affine":
        target = affine_shift(held, np.asarray(shift["a"], float),
                              np.asarray(shift["b"], float))
    else:
        raise ConfigError(f"config.shift.kind: unknown kind '{shift['kind']}'")
    return train, target


def run_scenario(cfg: ScenarioConfig) -> RunSummary:
    """Replay every replication of the scenario; failures of one method
    in one replication are recorded and do not stop the study."""
    summary = RunSummary()
    csv_cache: dict = {}
    for rep in range(cfg.replications):
        seed = derive_seed(cfg.base_seed, rep)
        train, target = _make_rep_data(cfg, seed, csv_cache)
        for k, method_cfg in enumerate(cfg.methods):
            mseed = derive_seed(seed, 100 + k)
            t0 = time.perf_counter()
            try:
                intervals, lam = _run_method(method_cfg, train, target.x,
                                             cfg.alpha_level, cfg.fractions, mseed)
            except Exception as exc:  # isolate per-method failures
                summary.failures.append({"rep": rep, "method": method_cfg["name"],
                                         "error": f"{type(exc).__name__}: {exc}"})
                continue
            runtime = time.perf_counter() - t0
            cov, width = coverage_and_width(intervals, target.y)
            n_inf = int(np.count_nonzero(~np.isfinite(intervals.width)))
            summary.rows.append(RepResult(rep, method_cfg["name"], cov, width,
                                          lam, runtime, n_inf))
    return summary


def _fmt(value) -> str:
    if value is None:
        return ""
    return repr(float(value))


def emit_report(s: RunSummary, out_dir: str) -> tuple[str, str]:
    """Write per_rep.csv (one row per replication and method, fixed column
    order) and summary.json (median/IQR/mean/SD per metric per method).
    Returns the two paths."""
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "per_rep.csv")
    with open(csv_path, "w") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for r in s.rows:
            fh.write(",".join([
                str(r.rep), r.method, _fmt(r.coverage), _fmt(r.avg_width),
                _fmt(r.lambda_hat), _fmt(r.runtime_s), str(r.n_infinite),
            ]) + "\n")
    json_path = os.path.join(out_dir, "summary.json")
    with open(json_path, "w") as fh:
        json.dump({"aggregates": s.aggregates(), "failures": s.failures}, fh, indent=2)
    return csv_path, json_path


def read_per_rep(path: str) -> RunSummary:
    """Inverse of the CSV side of ``emit_report``."""
    summary = RunSummary()
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if tuple(header) != CSV_COLUMNS:
            raise ConfigError(f"unexpected per-rep header {header}")
        for line in fh:
            cells = line.rstrip("\n").split(",")
            summary.rows.append(RepResult(
                rep=int(cells[0]), method=cells[1], coverage=float(cells[2]),
                avg_width=float(cells[3]),
                lambda_hat=None if cells[4] == "" else float(cells[4]),
                runtime_s=float(cells[5]), n_infinite=int(cells[6])))
    return summary
