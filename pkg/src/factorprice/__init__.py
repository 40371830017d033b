"""factorprice: personalized and single-factor pricing for segmented markets.

The toolkit computes per-segment optimal prices, optimizes price schedules
restricted to a ray ``q f`` (uniform, economic, robust, per-unit and
bundle-size schedules), certifies worst-case profit guarantees from the
spread of personalized prices, clusters segments to tighten those
guarantees, and reproduces randomized benchmark tables.
"""

from .bench import (
    CellResult,
    ExperimentConfig,
    build_instance,
    gen_lcmnl_instance,
    gen_linear_instance,
    gen_nonlinear_instance,
    preset,
    run_experiment,
    write_results_csv,
)
from .clustering import (
    ClusterInfo,
    ClusterPartition,
    clustered_factor_profit,
    fpf_cluster,
    kmeans_cluster,
    log_ratio_distance,
)
from .engine import (
    FactorResult,
    PersonalizedSolution,
    bundle_size_factor,
    component_price_factor,
    economic_factor,
    factor_optimize,
    nonpersonalized_heuristic,
    personalized_optimize,
    ray_values,
    robust_factor,
)
from .errors import FactorPriceError, NumericError, ValidationError
from .guarantees import (
    A1Profile,
    BoundReport,
    P1P2Report,
    TightnessResult,
    check_a1,
    check_p1_p2,
    compute_bound,
    constrained_beta,
    finite_set_beta,
    nonlinear_pricing_beta,
    price_spread,
    tightness_oracle,
)
from .lcp import LcpResult, lcp_adjust, solve_lcp
from .market import (
    PRICE_CAP,
    BundleMarket,
    LinearModel,
    MarketInstance,
    MnlSegmentModel,
    Segment,
    aggregate_profit,
    eval_demand,
    eval_jacobian,
    segment_profit,
)
from .serialize import load_config, load_instance, save_config, save_instance

__version__ = "0.1.0"

__all__ = [
    "A1Profile",
    "BoundReport",
    "BundleMarket",
    "CellResult",
    "ClusterInfo",
    "ClusterPartition",
    "ExperimentConfig",
    "FactorPriceError",
    "FactorResult",
    "LcpResult",
    "LinearModel",
    "MarketInstance",
    "MnlSegmentModel",
    "NumericError",
    "P1P2Report",
    "PRICE_CAP",
    "PersonalizedSolution",
    "Segment",
    "TightnessResult",
    "ValidationError",
    "aggregate_profit",
    "build_instance",
    "bundle_size_factor",
    "check_a1",
    "check_p1_p2",
    "clustered_factor_profit",
    "component_price_factor",
    "compute_bound",
    "constrained_beta",
    "economic_factor",
    "eval_demand",
    "eval_jacobian",
    "factor_optimize",
    "finite_set_beta",
    "fpf_cluster",
    "gen_lcmnl_instance",
    "gen_linear_instance",
    "gen_nonlinear_instance",
    "kmeans_cluster",
    "lcp_adjust",
    "load_config",
    "load_instance",
    "log_ratio_distance",
    "nonlinear_pricing_beta",
    "nonpersonalized_heuristic",
    "personalized_optimize",
    "preset",
    "price_spread",
    "ray_values",
    "robust_factor",
    "run_experiment",
    "save_config",
    "save_instance",
    "segment_profit",
    "solve_lcp",
    "tightness_oracle",
    "write_results_csv",
]
