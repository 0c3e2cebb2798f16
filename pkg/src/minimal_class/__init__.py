"""Minimal classes of near-optimal linear regression models.

Predictor scores come from Lasso and Elastic-Net fits; a simulated annealing
search over fixed-size subsets uses them to collect every model whose
in-sample MSE is close to the best one of its size.
"""

from .core import (Dataset, ExpansionOptions, LeastSquaresFit, RawTable, expand_features,
                   fit_least_squares, mse, read_csv, standardize)
from .errors import MinimalClassError
from .minclass import (FrequencyMatrix, MinimalClass, assemble_minimal_class,
                       brute_force_minimal_class, estimate_noise_variance, frequency_matrix, top_m)
from .scoring import GammaScores, SupportPartition, compute_gamma, partition_supports, score_predictors
from .search import AnnealingConfig, ModelPool, multi_start_search, run_annealing
from .simulation import ScenarioConfig, evaluate_recovery, generate_scenario, run_study
from .solver import PenaltySpec, SparseFit, cv_select_lambda, reduced_penalty_lasso, solve_penalized

__version__ = "0.1.0"
