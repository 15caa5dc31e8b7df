"""Bootstrap median-of-means estimation and K-bMOM robust clustering."""

from .baselines import (BaselineParams, fit_restarts, init_kmpp, init_random, kmeans_fit,
                        kmedians_fit, trimmed_kmeans_fit)
from .clustering import (KbmomParams, aitken_step, assign, block_kmom_fit, block_risk,
                         kbmom_fit, kbmom_init, median_block_init, median_block_select,
                         sample_block)
from .data import CentroidSet, ClusteringResult, Dataset
from .datagen import MixtureSpec, OutlierSpec, ScenarioConfig, contaminate, generate, preset
from .estimators import (BlockPlan, BreakdownReport, PlanBounds, bmom, bmom_breakdown_limit,
                         mc_breakdown, mom, mom_breakdown, plan_bounds, prob_breakdown_bound)
from .exceptions import (CSVParseError, DegenerateIterationError, InfeasibleError,
                         InvalidPlanError, KbmomError, UndefinedMetricError)
from .harness import load_csv, run_experiment, save_csv
from .kernels import BACKEND
from .metrics import accuracy_matched, ari, distortion_clean, evaluate, nb_clusters_clean, rmse_matched
from .tuning import blocksize_sweep, detect_breakpoint

__version__ = "0.1.0"
