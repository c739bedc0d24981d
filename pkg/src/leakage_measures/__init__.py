"""Sample-based estimators of information leakage between continuous variables.

Histogram KL/TV/JS, Wasserstein-1 via the transportation LP and Sinkhorn,
k-NN KL and Gaussian-kernel MMD, with closed-form Gaussian reference values,
analytic relation checks and a sweep harness.
"""

from .bounds import BoundReport, check_relations, w1_le_w2
from .errors import DegenerateInputError, LeakageError, ParameterError, ResourceError, SingularityError
from .hist_divergence import DivergenceValue, LogBase, histogram_divergences, js_hist, kl_hist, tv_hist
from .histogram import BinRange, HistogramGrid, build_histogram, joint_range
from .knn import KnnConfig, kl_knn
from .mmd import KernelSpec, kernel_eval, mmd2_estimate, mmd2_unbiased
from .oracles import (OracleReport, gaussian_kl, gaussian_w2, js_upper_bound_gmm, share_oracle,
                      share_scenario_kl, tv_upper_bounds)
from .scenarios import (GaussianSpec, ScenarioKind, ScenarioSpec, sample_gaussian, sample_joint,
                        sample_product_of_marginals)
from .transport import TransportPlan, TransportProblem, sinkhorn, solve_lp, w1_lp, w1_sinkhorn

__version__ = "0.1.0"

__all__ = [
    "BinRange", "BoundReport", "DegenerateInputError", "DivergenceValue", "GaussianSpec",
    "HistogramGrid", "KernelSpec", "KnnConfig", "LeakageError", "LogBase", "OracleReport",
    "ParameterError", "ResourceError", "ScenarioKind", "ScenarioSpec", "SingularityError",
    "TransportPlan", "TransportProblem", "build_histogram", "check_relations", "gaussian_kl",
    "gaussian_w2", "histogram_divergences", "joint_range", "js_hist", "js_upper_bound_gmm",
    "kernel_eval", "kl_hist", "kl_knn", "mmd2_estimate", "mmd2_unbiased", "sample_gaussian",
    "sample_joint", "sample_product_of_marginals", "share_oracle", "share_scenario_kl",
    "sinkhorn", "solve_lp", "tv_hist", "tv_upper_bounds", "w1_le_w2", "w1_lp", "w1_sinkhorn",
]
