"""Penalized least squares by cyclic coordinate descent.

The objective throughout is

    (1/n) ||y - X b||^2 + lambda1 * sum_j w_j |b_j| + lambda2 * ||b||^2

so the zero solution holds for ``lambda1 >= 2 max_j |x_j^T y| / n`` (unit
weights), and on an orthonormal design (``X^T X = n I``) the Lasso solution
is ``soft(x_j^T y / n, lambda1 / 2)``.  The KKT conditions checked by
:func:`kkt_residuals` use the same scaling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._cd import coordinate_descent
from .core import Dataset
from .errors import DimensionMismatch, FoldTooSmall, InvalidConfig

DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITER = 10_000
DEFAULT_ALPHA = 0.4
# path truncation thresholds (fraction of response sum of squares explained)
PATH_MAX_DEV = 0.999
PATH_MIN_DEV_CHANGE = 1e-5


@dataclass(frozen=True)
class PenaltySpec:
    lambda1: float
    lambda2: float = 0.0
    weights: np.ndarray | None = None

    def __post_init__(self):
        if not (self.lambda1 >= 0 and self.lambda2 >= 0):
            raise InvalidConfig(f"penalties must be nonnegative, got {self.lambda1}, {self.lambda2}")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if np.any(w < 0) or not np.all(np.isfinite(w)):
                raise InvalidConfig("penalty weights must be finite and nonnegative")
            object.__setattr__(self, "weights", w)

    @classmethod
    def from_alpha(cls, lam: float, alpha: float, weights=None) -> "PenaltySpec":
        """(lambda, alpha) form: lambda1 = lambda*alpha, lambda2 = lambda*(1-alpha)."""
        if not 0 < alpha <= 1:
            raise InvalidConfig(f"alpha must lie in (0, 1], got {alpha}")
        return cls(lam * alpha, lam * (1.0 - alpha), weights)

    @property
    def lam(self) -> float:
        return self.lambda1 + self.lambda2

    @property
    def alpha(self) -> float:
        total = self.lam
        return 1.0 if total == 0 else self.lambda1 / total

    def l1_weights(self, p: int) -> np.ndarray:
        if self.weights is None:
            return np.ones(p)
        if self.weights.shape != (p,):
            raise DimensionMismatch(f"{self.weights.shape[0]} weights for p={p}")
        return self.weights


@dataclass(frozen=True)
class SparseFit:
    coefficients: np.ndarray
    support: tuple[int, ...]
    objective: float
    iterations: int
    converged: bool
    penalty: PenaltySpec
    trace: np.ndarray = field(default_factory=lambda: np.zeros(0))


def objective(x: np.ndarray, y: np.ndarray, beta: np.ndarray, penalty: PenaltySpec) -> float:
    n, p = x.shape
    r = y - x @ beta
    w = penalty.l1_weights(p)
    return float(r @ r / n + penalty.lambda1 * np.sum(w * np.abs(beta))
                 + penalty.lambda2 * beta @ beta)


def kkt_residuals(x: np.ndarray, y: np.ndarray, beta: np.ndarray, penalty: PenaltySpec) -> np.ndarray:
    """Per-coordinate violation of the stationarity conditions (0 at an exact optimum)."""
    n, p = x.shape
    w = penalty.l1_weights(p)
    grad = 2.0 / n * (x.T @ (y - x @ beta))
    nz = beta != 0
    out = np.empty(p)
    out[nz] = np.abs(grad[nz] - 2.0 * penalty.lambda2 * beta[nz]
                     - penalty.lambda1 * w[nz] * np.sign(beta[nz]))
    out[~nz] = np.maximum(np.abs(grad[~nz]) - penalty.lambda1 * w[~nz], 0.0)
    return out


def solve_arrays(x: np.ndarray, y: np.ndarray, penalty: PenaltySpec, init=None,
                 tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                 active_set: bool = True, trace: bool = False) -> SparseFit:
    """:func:`solve_penalized` on bare arrays (used by cross-validation folds)."""
    if tol <= 0:
        raise InvalidConfig("tol must be positive")
    x = np.asfortranarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = x.shape
    if y.shape != (n,):
        raise DimensionMismatch(f"response of shape {y.shape} for {n} rows")
    pen1 = penalty.lambda1 * penalty.l1_weights(p)
    if init is None:
        beta = np.zeros(p)
        resid = y.copy()
    else:
        beta = np.array(init, dtype=float)
        if beta.shape != (p,):
            raise DimensionMismatch(f"init has shape {beta.shape}, expected ({p},)")
        resid = y - x @ beta
    col_sq = np.einsum("ij,ij->j", x, x)
    buf = np.empty(max_iter if trace else 0)
    sweeps, converged, n_trace = coordinate_descent(
        x, col_sq, pen1, float(penalty.lambda2), beta, resid, float(tol), int(max_iter),
        bool(active_set), buf)
    support = tuple(int(j) for j in np.flatnonzero(beta))
    obj = objective(x, y, beta, penalty)
    return SparseFit(beta, support, obj, int(sweeps), bool(converged), penalty, buf[:n_trace])


def solve_penalized(data: Dataset, penalty: PenaltySpec, init=None, tol: float = DEFAULT_TOL,
                    max_iter: int = DEFAULT_MAX_ITER, active_set: bool = True,
                    trace: bool = False) -> SparseFit:
    """Lasso / weighted Lasso / Elastic Net fit by cyclic coordinate descent.

    Parameters
    ----------
    data : Dataset
        Standardized data; no intercept is fitted.
    penalty : PenaltySpec
        ``lambda1``, ``lambda2`` and optional per-predictor ``weights``
        (zero weight leaves a coordinate unpenalized).
    init : array_like, optional
        Warm start.
    tol : float
        Convergence threshold on the largest coefficient change in a full sweep.
    max_iter : int
        Budget of sweeps. A fit that exhausts it comes back with
        ``converged=False`` rather than raising.
    active_set : bool
        Iterate over the nonzero coordinates between full sweeps.
    trace : bool
        Record the objective after every sweep.
    """
    return solve_arrays(data.x, data.y, penalty, init, tol, max_iter, active_set, trace)


def reduced_penalty_lasso(data: Dataset, lam: float, s_plus, delta: float, init=None,
                          tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> SparseFit:
    """Weighted Lasso whose weight is ``delta`` on ``s_plus`` and 1 elsewhere."""
    if not 0 <= delta <= 1:
        raise InvalidConfig(f"delta must lie in [0, 1], got {delta}")
    w = np.ones(data.p)
    w[list(s_plus)] = delta
    return solve_penalized(data, PenaltySpec(lam, 0.0, w), init, tol, max_iter)


def lambda_max(x: np.ndarray, y: np.ndarray, alpha: float = 1.0) -> float:
    """Smallest lambda (in the (lambda, alpha) form) giving the all-zero fit."""
    n = x.shape[0]
    return float(2.0 * np.max(np.abs(x.T @ y)) / (n * alpha))


def lambda_grid(x: np.ndarray, y: np.ndarray, alpha: float = 1.0, size: int = 100,
                ratio: float = 1e-3) -> np.ndarray:
    """Log-spaced decreasing grid from ``lambda_max`` down to ``ratio * lambda_max``."""
    top = lambda_max(x, y, alpha)
    if top == 0:
        return np.zeros(1)
    return np.geomspace(top, top * ratio, size)


@dataclass(frozen=True)
class CVCurve:
    lambdas: np.ndarray
    mse: np.ndarray
    se: np.ndarray
    folds: int
    alpha: float

    @property
    def best_index(self) -> int:
        return int(np.argmin(self.mse))


def fold_ids(n: int, folds: int, seed) -> np.ndarray:
    """Balanced random fold labels, deterministic given ``seed``."""
    if folds < 2:
        raise InvalidConfig(f"need at least 2 folds, got {folds}")
    if n // folds < 2:
        raise FoldTooSmall(f"{folds} folds over {n} observations leaves a fold with < 2 rows")
    perm = np.random.default_rng(seed).permutation(n)
    ids = np.empty(n, dtype=int)
    ids[perm] = np.arange(n) % folds
    return ids


def solve_path(x, y, lambdas, alpha, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER,
               early_stop=True):
    """Warm-started fits along a decreasing lambda grid.

    Returns a ``(len(lambdas), p)`` array and the number of grid points
    actually solved.  With ``early_stop`` the path halts once the fit explains
    more than ``PATH_MAX_DEV`` of the response sum of squares, or the
    explained fraction grows by less than ``PATH_MIN_DEV_CHANGE`` between
    grid points; later rows repeat the last solution.
    """
    betas = np.empty((len(lambdas), x.shape[1]))
    tss = float(y @ y)
    beta = None
    prev_dev = 0.0
    solved = len(lambdas)
    for k, lam in enumerate(lambdas):
        fit = solve_arrays(x, y, PenaltySpec.from_alpha(lam, alpha), beta, tol, max_iter)
        beta = fit.coefficients
        betas[k] = beta
        if early_stop and tss > 0:
            r = y - x @ beta
            dev = 1.0 - float(r @ r) / tss
            if dev > PATH_MAX_DEV or (k > 0 and dev - prev_dev < PATH_MIN_DEV_CHANGE * dev):
                betas[k + 1:] = beta
                solved = k + 1
                break
            prev_dev = dev
    return betas, solved


def cv_select_lambda(data: Dataset, alpha: float = 1.0, folds: int = 10, lambdas=None,
                     seed=0, tol: float = DEFAULT_TOL,
                     early_stop: bool = True) -> tuple[float, CVCurve]:
    """K-fold cross-validated choice of lambda for the (lambda, alpha) penalty.

    Each training fold is re-centered (mean of x and y over the training rows)
    before fitting; held-out predictions add the training means back.  The
    returned lambda minimizes the pooled out-of-fold MSE; ties go to the
    larger lambda.  With ``early_stop`` the grid is first truncated where the
    full-data path stops (see :func:`solve_path`), so the curve may be
    shorter than the grid passed in.
    """
    x, y = data.x, data.y
    n = data.n
    if lambdas is None:
        lambdas = lambda_grid(x, y, alpha)
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.size == 0:
        raise InvalidConfig("lambda grid is empty")
    if lambdas.size > 1 and np.any(np.diff(lambdas) >= 0):
        raise InvalidConfig("lambda grid must be strictly decreasing")
    ids = fold_ids(n, folds, seed)
    if early_stop and lambdas.size > 1:
        _, solved = solve_path(x, y, lambdas, alpha, tol)
        lambdas = lambdas[:solved]
    sq_err = np.empty((folds, lambdas.size))
    for f in range(folds):
        test = ids == f
        train = ~test
        xm = x[train].mean(axis=0)
        ym = y[train].mean()
        betas, _ = solve_path(x[train] - xm, y[train] - ym, lambdas, alpha, tol,
                              early_stop=early_stop)
        pred = (x[test] - xm) @ betas.T + ym
        sq_err[f] = ((y[test][:, None] - pred) ** 2).mean(axis=0)
    sizes = np.bincount(ids, minlength=folds)
    curve = (sizes[:, None] * sq_err).sum(axis=0) / n
    se = sq_err.std(axis=0, ddof=1) / np.sqrt(folds)
    cv = CVCurve(lambdas, curve, se, folds, alpha)
    return float(lambdas[cv.best_index]), cv
