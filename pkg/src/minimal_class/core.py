"""Data representation, standardization and least-squares refits.

A *model* is a sorted tuple of column indices.  All fitting happens on the
standardized design held by :class:`Dataset`; coefficients can be mapped
back to the raw scale with :func:`to_raw_scale`.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import BadInput, ConstantColumn, DimensionMismatch, NonFinite, SingularGram

# condition number of X_S^T X_S above which a model is declared singular
GRAM_COND_LIMIT = 1e12


def as_model(indices: Iterable[int], p: int | None = None) -> tuple[int, ...]:
    """Return ``indices`` as a strictly increasing tuple, validating range."""
    model = tuple(sorted(int(i) for i in indices))
    if len(set(model)) != len(model):
        raise BadInput(f"duplicate indices in model {model}")
    if model and model[0] < 0:
        raise BadInput(f"negative index in model {model}")
    if p is not None and model and model[-1] >= p:
        raise BadInput(f"index {model[-1]} out of range for p={p}")
    return model


@dataclass(frozen=True)
class RawTable:
    values: np.ndarray
    column_names: list[str]
    response: np.ndarray
    response_name: str = "y"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        response = np.asarray(self.response, dtype=float)
        if values.ndim != 2:
            raise DimensionMismatch("predictor matrix must be two-dimensional")
        n, p = values.shape
        if response.shape != (n,):
            raise DimensionMismatch(f"response has shape {response.shape}, expected ({n},)")
        if len(self.column_names) != p:
            raise DimensionMismatch(f"{len(self.column_names)} column names for {p} columns")
        if n < 2 or p < 1:
            raise BadInput(f"need n >= 2 and p >= 1, got n={n}, p={p}")
        if not (np.all(np.isfinite(values)) and np.all(np.isfinite(response))):
            raise NonFinite("input contains NaN or infinite values")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "response", response)
        object.__setattr__(self, "column_names", list(self.column_names))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class Dataset:
    """Centered and scaled design with a centered response.

    ``ddof`` is the divisor offset used for the column scale: 1 gives unit
    sample variance (the default), 0 gives unit population variance.
    """

    x: np.ndarray
    y: np.ndarray
    x_means: np.ndarray
    x_scales: np.ndarray
    y_mean: float
    column_names: list[str] = field(default_factory=list)
    ddof: int = 1

    def __post_init__(self):
        for name in ("x", "y", "x_means", "x_scales"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not self.column_names:
            object.__setattr__(self, "column_names", [f"x{j}" for j in range(self.p)])

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def subset_rows(self, rows) -> "Dataset":
        """Rows of the standardized data, kept in standardized units (no refit of constants)."""
        return Dataset(self.x[rows], self.y[rows], self.x_means, self.x_scales,
                       self.y_mean, self.column_names, self.ddof)

    def drop_columns(self, columns: Sequence[int]) -> "Dataset":
        keep = [j for j in range(self.p) if j not in set(columns)]
        return Dataset(self.x[:, keep], self.y, self.x_means[keep], self.x_scales[keep],
                       self.y_mean, [self.column_names[j] for j in keep], self.ddof)


def standardize(raw: RawTable, ddof: int = 1) -> Dataset:
    """Center every column and scale it to unit variance; center the response."""
    x = raw.values
    y = raw.response
    n = raw.n
    if n - ddof < 1:
        raise BadInput(f"n={n} too small for ddof={ddof}")
    means = x.mean(axis=0)
    xc = x - means
    scales = np.sqrt((xc ** 2).sum(axis=0) / (n - ddof))
    # relative test: a column is constant if its spread is at rounding level
    magnitude = np.maximum(np.abs(x).max(axis=0), 1.0)
    for j in np.flatnonzero(scales <= 1e-12 * magnitude):
        raise ConstantColumn(int(j), raw.column_names[j])
    xs = xc / scales
    # second pass removes the residual rounding drift of the first
    xs = xs - xs.mean(axis=0)
    xs = xs / np.sqrt((xs ** 2).sum(axis=0) / (n - ddof))
    y_mean = float(y.mean())
    yc = y - y_mean
    yc = yc - yc.mean()
    return Dataset(xs, yc, means, scales, y_mean, raw.column_names, ddof)


@dataclass(frozen=True)
class LeastSquaresFit:
    model: tuple[int, ...]
    coefficients: np.ndarray
    mse: float


def fit_least_squares(data: Dataset, model: Sequence[int]) -> LeastSquaresFit:
    """Least-squares refit of ``y`` on the columns in ``model``.

    Uses a thin SVD of ``X_S`` (rank revealing); raises :class:`SingularGram`
    when ``cond(X_S^T X_S)`` exceeds ``GRAM_COND_LIMIT``.
    """
    model = as_model(model, data.p)
    k = len(model)
    if k == 0:
        return LeastSquaresFit(model, np.zeros(0), float(data.y @ data.y) / data.n)
    if k > data.n - 1:
        raise SingularGram(f"model size {k} exceeds n-1={data.n - 1}")
    xs = data.x[:, model]
    u, s, vt = np.linalg.svd(xs, full_matrices=False)
    if s[-1] <= 0.0 or (s[0] / s[-1]) ** 2 > GRAM_COND_LIMIT:
        raise SingularGram(f"Gram matrix of model {model} is numerically singular")
    beta = vt.T @ ((u.T @ data.y) / s)
    resid = data.y - xs @ beta
    return LeastSquaresFit(model, beta, float(resid @ resid) / data.n)


def mse(data: Dataset, model: Sequence[int], coefficients) -> float:
    """Mean squared residual ``||y - X_S b||^2 / n``."""
    model = as_model(model, data.p)
    coefficients = np.asarray(coefficients, dtype=float).reshape(-1)
    if coefficients.shape[0] != len(model):
        raise DimensionMismatch(
            f"{coefficients.shape[0]} coefficients for a model of size {len(model)}")
    resid = data.y - data.x[:, model] @ coefficients if model else data.y
    return float(resid @ resid) / data.n


def to_raw_scale(data: Dataset, model: Sequence[int], coefficients) -> tuple[np.ndarray, float]:
    """Map standardized coefficients to raw-scale slopes and an intercept."""
    model = as_model(model, data.p)
    coefficients = np.asarray(coefficients, dtype=float)
    idx = list(model)
    slopes = coefficients / data.x_scales[idx]
    intercept = data.y_mean - float(slopes @ data.x_means[idx]) if idx else data.y_mean
    return slopes, intercept


# -- feature expansion -------------------------------------------------------

@dataclass(frozen=True)
class ExpansionOptions:
    log: bool = False
    sqrt: bool = False
    square: bool = False
    interactions: bool = False

    @classmethod
    def parse(cls, spec: str) -> "ExpansionOptions":
        """Parse a comma list such as ``"log,sqrt,square,interactions"``."""
        items = {s.strip().lower() for s in spec.split(",") if s.strip()}
        unknown = items - {"log", "sqrt", "square", "interactions"}
        if unknown:
            raise BadInput(f"unknown expansion option(s): {sorted(unknown)}")
        return cls(**{name: True for name in items})


def expand_features(raw: RawTable, opts: ExpansionOptions) -> tuple[RawTable, list[str]]:
    """Append transformed columns and pairwise products of the original columns.

    Returns the expanded table and a list of skipped transforms (log and sqrt
    need strictly positive columns).
    """
    cols = [raw.values[:, j] for j in range(raw.p)]
    names = list(raw.column_names)
    skipped: list[str] = []
    transforms = []
    if opts.log:
        transforms.append(("log", np.log, True))
    if opts.sqrt:
        transforms.append(("sqrt", np.sqrt, True))
    if opts.square:
        transforms.append(("square", np.square, False))
    for label, fn, needs_positive in transforms:
        for j, name in enumerate(raw.column_names):
            col = raw.values[:, j]
            if needs_positive and np.any(col <= 0):
                skipped.append(f"{label}({name})")
                continue
            cols.append(fn(col))
            names.append(f"{name}^2" if label == "square" else f"{label}({name})")
    if opts.interactions:
        for a in range(raw.p):
            for b in range(a + 1, raw.p):
                cols.append(raw.values[:, a] * raw.values[:, b])
                names.append(f"{raw.column_names[a]}×{raw.column_names[b]}")
    table = RawTable(np.column_stack(cols), names, raw.response, raw.response_name)
    return table, skipped


# -- CSV ingestion -------------------------------------------------------------

_MISSING = {"", "na", "nan", "null", "none", "?"}


def read_csv(path, response: str) -> RawTable:
    """Load a headed CSV; ``response`` names the outcome column.

    Columns with no numeric entries at all (labels, ids) are dropped. Any
    missing or non-numeric cell in a numeric column is an error.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise BadInput(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    body = [r for r in rows[1:] if any(cell.strip() for cell in r)]
    if response not in header:
        raise BadInput(f"response column {response!r} not found in {path}")
    for i, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise BadInput(f"{path}: line {i} has {len(r)} fields, expected {len(header)}")
    numeric: dict[str, list[float]] = {}
    for j, name in enumerate(header):
        cells = [r[j].strip() for r in body]
        parsed = [_to_float(c) for c in cells]
        if name != response and all(v is None and c.lower() not in _MISSING
                                    for v, c in zip(parsed, cells)):
            continue  # label column
        for line, (v, c) in enumerate(zip(parsed, cells), start=2):
            if v is None:
                what = "missing value" if c.lower() in _MISSING else f"non-numeric value {c!r}"
                raise BadInput(f"{path}: {what} in column {name!r} at line {line}")
        numeric[name] = parsed
    y = np.array(numeric.pop(response))
    if not numeric:
        raise BadInput(f"{path}: no numeric predictor columns")
    names = list(numeric)
    x = np.column_stack([numeric[c] for c in names])
    return RawTable(x, names, y, response)


def _to_float(cell: str):
    try:
        return float(cell)
    except ValueError:
        return None


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def fmt(v) -> str:
    """Stable text form for CSV output (repr-exact floats)."""
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)
