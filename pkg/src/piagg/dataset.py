"""Tabular data model, CSV ingestion, deterministic splitting, and the
synthetic generators used by the benchmark scenarios.

All randomness flows through explicit integer seeds (see ``rng``), so any
split or draw can be reproduced bit-exactly from its seed alone.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, EmptyInput, MissingColumn, ParseError
from .rng import Rng


@dataclass(frozen=True)
class DataTable:
    """Covariate matrix with an optional response vector.

    ``y`` is None for unlabeled (target-domain) tables. Entries must be
    finite.
    """

    x: np.ndarray
    y: np.ndarray | None = None
    column_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=np.float64))
        object.__setattr__(self, "x", x)
        if not np.all(np.isfinite(x)):
            raise ValueError("covariates contain non-finite entries")
        if self.y is not None:
            y = np.asarray(self.y, dtype=np.float64).ravel()
            if y.shape[0] != x.shape[0]:
                raise DimensionMismatch("y length does not match number of rows")
            if not np.all(np.isfinite(y)):
                raise ValueError("response contains non-finite entries")
            object.__setattr__(self, "y", y)
        if not self.column_names:
            object.__setattr__(
                self, "column_names", [f"x{j + 1}" for j in range(x.shape[1])])

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    def take(self, idx: np.ndarray) -> "DataTable":
        y = self.y[idx] if self.y is not None else None
        return DataTable(self.x[idx], y, list(self.column_names))

    def without_labels(self) -> "DataTable":
        return DataTable(self.x, None, list(self.column_names))


@dataclass(frozen=True)
class SplitSpec:
    """Fractions of a deterministic split; they must be positive and sum
    to one."""

    fractions: tuple[float, ...]
    seed: int

    def __post_init__(self):
        fr = tuple(float(f) for f in self.fractions)
        if any(f <= 0 for f in fr):
            raise ValueError("all fractions must be positive")
        if abs(sum(fr) - 1.0) > 1e-9:
            raise ValueError("fractions must sum to 1")
        object.__setattr__(self, "fractions", fr)


def load_csv(path: str, label_column: str | None = None) -> DataTable:
    """Load a comma-separated numeric file with a mandatory header row.

    When ``label_column`` is given, that column becomes the response and
    the rest form the covariates.

    Raises ParseError naming the offending cell on any non-numeric value,
    and MissingColumn when the label column is absent.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyInput(f"{path} is empty") from None
        header = [h.strip() for h in header]
        label_idx = None
        if label_column is not None:
            if label_column not in header:
                raise MissingColumn(f"column '{label_column}' not in header {header}")
            label_idx = header.index(label_column)
        rows: list[list[float]] = []
        labels: list[float] = []
        for r, raw in enumerate(reader, start=2):
            if len(raw) != len(header):
                raise ParseError(f"row {r}: expected {len(header)} cells, got {len(raw)}")
            vals = []
            for j, cell in enumerate(raw):
                try:
                    value = float(cell)
                except ValueError:
                    raise ParseError(
                        f"row {r}, column '{header[j]}': cannot parse '{cell.strip()}'"
                    ) from None
                if not np.isfinite(value):
                    raise ParseError(
                        f"row {r}, column '{header[j]}': non-finite value '{cell.strip()}'")
                vals.append(value)
            if label_idx is not None:
                labels.append(vals.pop(label_idx))
            rows.append(vals)
    if not rows:
        raise EmptyInput(f"{path} has a header but no data rows")
    names = [h for j, h in enumerate(header) if j != label_idx]
    x = np.asarray(rows, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64) if label_idx is not None else None
    return DataTable(x, y, names)


def _part_sizes(fractions: tuple[float, ...], n: int) -> list[int]:
    sizes = [int(f * n) for f in fractions]
    remainder = n - sum(sizes)
    for i in range(remainder):
        sizes[i % len(sizes)] += 1
    return sizes


def split(t: DataTable, s: SplitSpec) -> list[DataTable]:
    """Deterministically permute the rows, then cut contiguous blocks
    sized by the fractions (remainders go to the leftmost parts)."""
    if t.n < len(s.fractions):
        raise ValueError("fewer rows than parts")
    perm = Rng(s.seed).permutation(t.n)
    sizes = _part_sizes(s.fractions, t.n)
    parts = []
    start = 0
    for size in sizes:
        parts.append(t.take(perm[start:start + size]))
        start += size
    return parts


def weighted_resample(t: DataTable, weights: np.ndarray, m: int, seed: int) -> DataTable:
    """Draw ``m`` rows with replacement, row i with probability
    proportional to ``weights[i]``."""
    w = np.asarray(weights, dtype=np.float64).ravel()
    if w.shape[0] != t.n:
        raise DimensionMismatch("weights length does not match table rows")
    if np.any(w < 0) or w.sum() <= 0:
        raise ValueError("weights must be nonnegative with positive sum")
    probs = w / w.sum()
    idx = Rng(seed).choice_with_replacement(np.cumsum(probs), m)
    return t.take(idx)


def tilt_resample(t: DataTable, beta: np.ndarray, m: int, seed: int) -> DataTable:
    """Exponential-tilting resample: row i is drawn with probability
    proportional to exp(x_i @ beta), computed in log space."""
    beta = np.asarray(beta, dtype=np.float64).ravel()
    if beta.shape[0] != t.d:
        raise DimensionMismatch("beta length does not match covariate dimension")
    logits = t.x @ beta
    logits -= logits.max()
    w = np.exp(logits)
    return weighted_resample(t, w, m, seed)


def affine_shift(t: DataTable, a: np.ndarray, b: np.ndarray) -> DataTable:
    """Map every covariate row x to A @ x + b; the response passes through."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != (t.d, t.d) or b.shape != (t.d,):
        raise DimensionMismatch(f"expected a {t.d}x{t.d} matrix and length-{t.d} vector")
    return DataTable(t.x @ a.T + b, t.y, list(t.column_names))


def gen_hetero_sim(n: int, seed: int) -> DataTable:
    """One-dimensional heteroskedastic simulator.

    X ~ Unif[-1, 1] and an independent noise U ~ Unif[-1, 1] give
    Y = sqrt(1 + 25 X^4) * U, so the conditional spread grows steeply
    toward the edges of the covariate range. All X draws precede all
    noise draws in the generator stream.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    gen = Rng(seed)
    x = gen.uniform(-1.0, 1.0, n)
    xi = gen.uniform(-1.0, 1.0, n)
    y = np.sqrt(1.0 + 25.0 * x ** 4) * xi
    return DataTable(x[:, None], y, ["x1"])


def gen_affine_gauss(n_source: int, n_target: int, a: np.ndarray, b: np.ndarray,
                     seed: int, noise_scale: float = 1.0) -> tuple[DataTable, DataTable]:
    """Paired source/target generator for transport-map scenarios.

    Source covariates are standard Gaussians with a linear mean and
    heteroskedastic uniform noise. Target covariates are A @ z + b for
    fresh Gaussian draws z, with labels generated from z itself, so the
    conditional law of the response is exactly preserved under the map
    x -> A^{-1}(x - b). Target labels are for evaluation only.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64).ravel()
    d = a.shape[0]
    if a.shape != (d, d) or b.shape != (d,):
        raise DimensionMismatch("a must be square and b of matching length")
    theta = np.linspace(1.0, 0.2, d)
    gen = Rng(seed)

    def draw(n: int) -> tuple[np.ndarray, np.ndarray]:
        z = gen.normal(n * d).reshape(n, d)
        scale = noise_scale * np.sqrt(1.0 + 0.5 * z[:, 0] ** 2)
        noise = gen.uniform(-1.0, 1.0, n) * scale
        return z, z @ theta + noise

    xs, ys = draw(n_source)
    zt, yt = draw(n_target)
    source = DataTable(xs, ys)
    target = DataTable(zt @ a.T + b, yt)
    return source, target
