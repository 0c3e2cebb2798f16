"""Predictor scores built from Lasso and Elastic-Net supports.

The Lasso support ``s_l`` and the predictors that only the Elastic Net picks
up (``s_plus``) are tracked along a weighted-Lasso path in which ``s_plus``
gets its penalty multiplied by ``delta``.  A predictor's score records the
largest ``delta`` at which it is still in (for ``s_plus``) or already out of
(for ``s_l``) that path's support.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dataset, as_model
from .errors import DimensionMismatch, EmptySupports, InvalidConfig
from .solver import (DEFAULT_ALPHA, DEFAULT_TOL, PenaltySpec, SparseFit, cv_select_lambda,
                     reduced_penalty_lasso, solve_penalized)

SET_L, SET_PLUS, SET_OUT = "L", "+", "out"


def default_delta_grid(step: float = 0.02) -> np.ndarray:
    """Evenly spaced grid ``0, step, ..., 1`` (exact endpoints)."""
    count = int(round(1.0 / step))
    if not np.isclose(count * step, 1.0):
        raise InvalidConfig(f"grid step {step} does not divide 1")
    return np.linspace(0.0, 1.0, count + 1)


@dataclass(frozen=True)
class SupportPartition:
    s_l: tuple[int, ...]
    s_plus: tuple[int, ...]
    s_out: tuple[int, ...]

    @property
    def p(self) -> int:
        return len(self.s_l) + len(self.s_plus) + len(self.s_out)

    def label(self, j: int) -> str:
        if j in self.s_l:
            return SET_L
        if j in self.s_plus:
            return SET_PLUS
        return SET_OUT


def partition_supports(lasso, enet, p: int) -> SupportPartition:
    """Split ``0..p-1`` into Lasso support, Elastic-Net-only and neither.

    ``lasso`` / ``enet`` may be :class:`SparseFit` objects or plain index
    collections.
    """
    s_l = set(_support(lasso, p))
    s_en = set(_support(enet, p))
    s_plus = s_en - s_l
    s_out = set(range(p)) - s_l - s_plus
    return SupportPartition(tuple(sorted(s_l)), tuple(sorted(s_plus)), tuple(sorted(s_out)))


def _support(fit, p):
    if isinstance(fit, SparseFit):
        if fit.coefficients.shape[0] != p:
            raise DimensionMismatch(f"fit has {fit.coefficients.shape[0]} coefficients, p={p}")
        return fit.support
    return as_model(fit, p)


def reduced_penalty_path(data: Dataset, lam: float, part: SupportPartition, delta_grid,
                         tol: float = DEFAULT_TOL) -> list[tuple[float, tuple[int, ...]]]:
    """Support of the reduced-penalty Lasso at every grid value of ``delta``.

    The grid must be increasing with endpoints 0 and 1.  At ``delta = 0`` the
    ``s_plus`` coordinates are unpenalized.  Fits are warm-started from the
    neighbouring larger ``delta``.
    """
    grid = _check_grid(delta_grid)
    if not part.s_plus:
        fit = solve_penalized(data, PenaltySpec(lam), tol=tol)
        return [(float(d), fit.support) for d in grid]
    supports: list = [None] * len(grid)
    init = None
    for i in range(len(grid) - 1, -1, -1):
        fit = reduced_penalty_lasso(data, lam, part.s_plus, float(grid[i]), init, tol)
        init = fit.coefficients
        supports[i] = (float(grid[i]), fit.support)
    return supports


def _check_grid(delta_grid) -> np.ndarray:
    grid = np.asarray(delta_grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise InvalidConfig("delta grid needs at least two points")
    if grid[0] != 0.0 or grid[-1] != 1.0 or np.any(np.diff(grid) <= 0):
        raise InvalidConfig("delta grid must increase strictly from 0 to 1")
    return grid


@dataclass(frozen=True)
class GammaScores:
    gamma: np.ndarray
    delta_grid: np.ndarray
    i_star: np.ndarray | None = None
    partition: SupportPartition | None = None

    def __post_init__(self):
        g = np.array(self.gamma, dtype=float)
        if g.ndim != 1 or np.any(g < 0) or np.any(g > 1) or not np.all(np.isfinite(g)):
            raise InvalidConfig("scores must be finite and lie in [0, 1]")
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)

    @classmethod
    def from_vector(cls, gamma) -> "GammaScores":
        """Wrap an externally supplied score vector."""
        return cls(np.asarray(gamma, dtype=float), np.array([0.0, 1.0]))

    @property
    def p(self) -> int:
        return self.gamma.shape[0]

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(int(j) for j in np.flatnonzero(self.gamma > 0))

    @property
    def gamma_min(self) -> float:
        pos = self.gamma[self.gamma > 0]
        return float(pos.min()) if pos.size else 0.0

    def delta_star(self) -> np.ndarray:
        if self.i_star is None:
            return np.full(self.p, np.nan)
        return self.delta_grid[self.i_star]


def compute_gamma(path, part: SupportPartition, delta_grid) -> GammaScores:
    """Scores from a reduced-penalty path.

    For ``j`` in ``s_plus``: ``i* = max{i : j in support(delta_i)}`` and the
    score is ``delta_{i*} / 2``.  For ``j`` in ``s_l``:
    ``i* = max{i : j not in support(delta_i)}`` and the score is
    ``1 - delta_{i*} / 2``.  An empty max gives ``i* = 0``; ``s_out`` scores 0.
    """
    grid = _check_grid(delta_grid)
    if len(path) != len(grid):
        raise InvalidConfig(f"path has {len(path)} points for a grid of {len(grid)}")
    p = part.p
    i_star = np.zeros(p, dtype=int)
    gamma = np.zeros(p)
    members = [set(sup) for _, sup in path]
    for j in part.s_plus:
        hits = [i for i, sup in enumerate(members) if j in sup]
        i_star[j] = max(hits) if hits else 0
        gamma[j] = grid[i_star[j]] / 2.0
    for j in part.s_l:
        misses = [i for i, sup in enumerate(members) if j not in sup]
        i_star[j] = max(misses) if misses else 0
        gamma[j] = 1.0 - grid[i_star[j]] / 2.0
    return GammaScores(gamma, grid, i_star, part)


@dataclass(frozen=True)
class ScoreReport:
    """Everything produced on the way to the scores (for reports and the CLI)."""
    gamma: GammaScores
    lasso: SparseFit
    enet: SparseFit
    lasso_lambda: float
    enet_lambda: float
    path: list


def score_predictors(data: Dataset, alpha: float = DEFAULT_ALPHA, folds: int = 10,
                     delta_grid=None, seed=0, lasso_lambda: float | None = None,
                     enet_lambda: float | None = None, tol: float = DEFAULT_TOL) -> ScoreReport:
    """Full scoring stage: CV Lasso, CV Elastic Net, reduced-penalty path, scores.

    Lambdas not supplied are picked by ``folds``-fold cross-validation, both
    with the same fold assignment.  The Lasso lambda is reused along the path.
    """
    if delta_grid is None:
        delta_grid = default_delta_grid()
    if lasso_lambda is None:
        lasso_lambda, _ = cv_select_lambda(data, 1.0, folds, seed=seed, tol=tol)
    if enet_lambda is None:
        enet_lambda, _ = cv_select_lambda(data, alpha, folds, seed=seed, tol=tol)
    lasso = solve_penalized(data, PenaltySpec(lasso_lambda), tol=tol)
    enet = solve_penalized(data, PenaltySpec.from_alpha(enet_lambda, alpha), tol=tol)
    part = partition_supports(lasso, enet, data.p)
    if not part.s_l and not part.s_plus:
        raise EmptySupports("both the Lasso and the Elastic Net selected no predictors")
    path = reduced_penalty_path(data, lasso_lambda, part, delta_grid, tol)
    gamma = compute_gamma(path, part, delta_grid)
    return ScoreReport(gamma, lasso, enet, float(lasso_lambda), float(enet_lambda), path)
