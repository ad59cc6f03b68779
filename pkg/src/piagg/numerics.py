"""Shared numerical kernels: symmetric eigendecomposition, least squares,
ridge-penalized logistic regression, weighted quantiles, and check-loss
quantile regression.

Everything here is a pure function; fitted models are immutable after
construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize as _sp_optimize
from scipy import sparse as _sp

from .errors import (
    AllZeroWeights,
    DimensionMismatch,
    DivergentFit,
    EmptyInput,
    NotSymmetric,
    PiaggError,
    SingularDesign,
)


@dataclass(frozen=True)
class SymEig:
    """Eigenvalues in descending order with column-aligned orthonormal
    eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.T


@dataclass(frozen=True)
class LinearModel:
    """Linear coefficient vector with the intercept first.

    ``kind`` is one of ``ols_mean``, ``logistic``, ``quantile``; quantile
    models also carry their level ``tau``.  ``converged`` is reported by
    iterative fits and left None otherwise.
    """

    coefficients: np.ndarray
    kind: str
    tau: float | None = None
    converged: bool | None = None

    def linear_score(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != len(self.coefficients) - 1:
            raise DimensionMismatch(
                f"model expects {len(self.coefficients) - 1} covariates, got {x.shape[1]}")
        return self.coefficients[0] + x @ self.coefficients[1:]

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.linear_score(x)

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        if self.kind != "logistic":
            raise PiaggError("predict_proba is only defined for logistic models")
        return sigmoid(self.linear_score(x))


def sigmoid(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def design_with_intercept(x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    return np.hstack([np.ones((x.shape[0], 1)), x])


def sym_eig(m: np.ndarray, tol: float = 1e-10) -> SymEig:
    """Symmetric eigendecomposition by the cyclic Jacobi method.

    Sweeps of plane rotations run until the largest off-diagonal entry
    falls below ``tol * max|m|``. Raises NotSymmetric when the input's
    asymmetry exceeds that same threshold.
    """
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch("sym_eig expects a square matrix")
    d = a.shape[0]
    scale = np.max(np.abs(a)) if d else 0.0
    thresh = tol * max(scale, np.finfo(float).tiny)
    if np.max(np.abs(a - a.T)) > thresh:
        raise NotSymmetric("matrix asymmetry exceeds tolerance")
    a = (a + a.T) / 2.0
    v = np.eye(d)
    for _ in range(100):
        off = np.abs(a - np.diag(np.diag(a)))
        if off.size == 0 or off.max() <= thresh:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if abs(apq) <= thresh:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot_p = c * a[:, p] - s * a[:, q]
                rot_q = s * a[:, p] + c * a[:, q]
                a[:, p], a[:, q] = rot_p, rot_q
                rot_p = c * a[p, :] - s * a[q, :]
                rot_q = s * a[p, :] + c * a[q, :]
                a[p, :], a[q, :] = rot_p, rot_q
                a[p, q] = a[q, p] = 0.0
                vrot_p = c * v[:, p] - s * v[:, q]
                vrot_q = s * v[:, p] + c * v[:, q]
                v[:, p], v[:, q] = vrot_p, vrot_q
    eigenvalues = np.diag(a).copy()
    order = np.argsort(-eigenvalues, kind="stable")
    return SymEig(eigenvalues[order], v[:, order])


def ols_fit(x: np.ndarray, y: np.ndarray, ridge: float = 0.0) -> LinearModel:
    """Least squares with an intercept, via the (optionally ridged)
    normal equations ``(X'X + ridge I) beta = X'y``.

    Raises SingularDesign when ridge is zero and the normal equations are
    numerically singular.
    """
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")
    xd = design_with_intercept(x)
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (xd.shape[0],):
        raise DimensionMismatch("y length does not match x rows")
    gram = xd.T @ xd + ridge * np.eye(xd.shape[1])
    if ridge == 0.0:
        cond = np.linalg.cond(gram)
        if not np.isfinite(cond) or cond > 1e12:
            raise SingularDesign("normal equations are numerically singular; set ridge > 0")
    beta = np.linalg.solve(gram, xd.T @ y)
    return LinearModel(beta, "ols_mean")


def _penalized_nll(xd: np.ndarray, y: np.ndarray, beta: np.ndarray, ridge: float) -> float:
    eta = xd @ beta
    nll = float(np.sum(np.logaddexp(0.0, eta)) - y @ eta)
    return nll + 0.5 * ridge * float(beta @ beta)


def logistic_fit(x: np.ndarray, labels: np.ndarray, ridge: float = 1e-6,
                 max_iter: int = 100, grad_tol: float = 1e-8,
                 return_path: bool = False):
    """Ridge-penalized logistic regression by iteratively reweighted least
    squares with step-halving.

    Each iteration takes a Newton step on the penalized negative
    log-likelihood and halves the step until the objective does not
    increase. Convergence means the max-norm of the penalized gradient is
    at most ``grad_tol``; the outcome is reported in the model's
    ``converged`` flag.

    Raises
    ------
    DivergentFit
        when ridge is zero and the coefficients blow up, which happens on
        separable data; the fix is a positive ridge.
    """
    xd = design_with_intercept(x)
    y = np.asarray(labels, dtype=np.float64).ravel()
    if y.shape[0] != xd.shape[0]:
        raise DimensionMismatch("labels length does not match x rows")
    classes = np.unique(y)
    if not np.all(np.isin(classes, (0.0, 1.0))):
        raise ValueError("labels must be 0/1")
    if classes.size < 2:
        raise ValueError("labels must contain both classes")

    beta = np.zeros(xd.shape[1])
    nll = _penalized_nll(xd, y, beta, ridge)
    path = [nll]
    converged = False
    for _ in range(max_iter):
        p = sigmoid(xd @ beta)
        grad = xd.T @ (p - y) + ridge * beta
        if np.max(np.abs(grad)) <= grad_tol:
            converged = True
            break
        w = p * (1.0 - p)
        hess = xd.T @ (w[:, None] * xd) + ridge * np.eye(xd.shape[1])
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(hess, grad, rcond=None)[0]
        t = 1.0
        new_beta = beta - step
        new_nll = _penalized_nll(xd, y, new_beta, ridge)
        while new_nll > nll and t > 1e-10:
            t /= 2.0
            new_beta = beta - t * step
            new_nll = _penalized_nll(xd, y, new_beta, ridge)
        beta, nll = new_beta, new_nll
        path.append(nll)
        # a vanishing unpenalized likelihood or exploding coefficients both
        # indicate separation, where the MLE does not exist
        if ridge == 0.0 and (nll < 1e-6 or np.max(np.abs(beta)) > 1e6):
            raise DivergentFit("data appear separable; set ridge > 0")
    else:
        p = sigmoid(xd @ beta)
        grad = xd.T @ (p - y) + ridge * beta
        converged = bool(np.max(np.abs(grad)) <= grad_tol)
    model = LinearModel(beta, "logistic", converged=converged)
    if return_path:
        return model, path
    return model


def weighted_quantile(values: np.ndarray, weights: np.ndarray, q: float) -> float:
    """Left-continuous weighted quantile.

    Returns ``inf{v in values : sum of weights at values <= v >= q * total}``
    with tied values merged by weight accumulation. Equal weights reduce
    to the unweighted empirical quantile under the same convention.
    """
    v = np.asarray(values, dtype=np.float64).ravel()
    w = np.asarray(weights, dtype=np.float64).ravel()
    if v.size == 0:
        raise EmptyInput("values is empty")
    if w.shape != v.shape:
        raise DimensionMismatch("weights length does not match values")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    total = float(w.sum())
    if total <= 0:
        raise AllZeroWeights("weights sum to zero")
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1]")
    order = np.argsort(v, kind="stable")
    v_sorted = v[order]
    cum = np.cumsum(w[order])
    idx = int(np.searchsorted(cum, q * total, side="left"))
    idx = min(idx, v_sorted.size - 1)
    return float(v_sorted[idx])


def check_loss(residuals: np.ndarray, tau: float) -> float:
    r = np.asarray(residuals, dtype=np.float64)
    return float(np.sum(np.where(r >= 0, tau * r, (tau - 1.0) * r)))


def quantile_reg_lp_arrays(x: np.ndarray, y: np.ndarray, tau: float, sparse: bool = False):
    """Arrays of the standard LP reformulation of check-loss regression.

    Variables are ``[beta, u, v]`` with ``u, v >= 0`` the positive and
    negative residual parts; the equalities are ``X beta + u - v = y`` and
    the objective is ``tau * sum(u) + (1 - tau) * sum(v)``. The identity
    blocks dominate the constraint matrix, so a sparse representation is
    available for large n.
    """
    xd = design_with_intercept(x)
    y = np.asarray(y, dtype=np.float64).ravel()
    n, p = xd.shape
    c = np.concatenate([np.zeros(p), np.full(n, tau), np.full(n, 1.0 - tau)])
    if sparse:
        a_eq = _sp.hstack([_sp.csc_matrix(xd), _sp.eye(n, format="csc"),
                           -_sp.eye(n, format="csc")], format="csc")
    else:
        a_eq = np.hstack([xd, np.eye(n), -np.eye(n)])
    return c, a_eq, y, p


def quantile_reg_fit(x: np.ndarray, y: np.ndarray, tau: float) -> LinearModel:
    """Linear quantile regression by minimizing the check loss.

    The problem is posed as the standard LP with split residual parts and
    handed to a deterministic LP backend; the dense in-house simplex is
    exercised against it on small instances in the test suite, but the
    production path uses HiGHS because the tableau for thousands of data
    points is impractical to carry densely.
    """
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must lie in (0, 1)")
    y = np.asarray(y, dtype=np.float64).ravel()
    xd = design_with_intercept(x)
    n, p = xd.shape
    if y.shape[0] != n:
        raise DimensionMismatch("y length does not match x rows")
    if n < p + 1:
        raise ValueError(f"need at least {p + 1} observations for {p - 1} covariates")
    c, a_eq, b_eq, n_coef = quantile_reg_lp_arrays(x, y, tau, sparse=True)
    bounds = [(None, None)] * n_coef + [(0, None)] * (2 * n)
    res = _sp_optimize.linprog(c, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if not res.success:
        raise PiaggError(f"quantile regression LP failed: {res.message}")
    beta = np.asarray(res.x[:n_coef], dtype=np.float64)
    return LinearModel(beta, "quantile", tau=tau, converged=True)
