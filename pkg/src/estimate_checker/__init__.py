"""
Estimate checks and falsification along simulated trajectories.

Every check returns a CheckReport: "violated" carries a replayable witness,
"holds-on-samples" only means no sampled point broke the estimate.
"""

from .auxiliary import AUXILIARY_GAIN, auxiliary_gain_check, certify_phi
from .checks import check_integral, check_pointwise, check_trajectory, replay_witness, witness_replays
from .comparison import (
    DOMINATION,
    ComparisonSystem,
    ComparisonTrajectory,
    check_comparison_principle,
    check_domination,
    comparison_bound,
    default_epsilon,
)
from .falsifier import Falsifier, SearchEncoding, falsify
from .handlers import EstimateHandlerFactory
from .lyapunov import GradientMode, check_lyapunov_dissipation, dissipation_samples, gradient_agreement
from .reachability import (
    ForwardCompleteBound,
    check_forward_complete_bound,
    energy_limited_signal,
    reach_bound_m,
)
from .reports import CheckReport, Verdict, Witness, build_report, build_sample_report
from .spec import KL, EstimateForm, EstimateSpec, EstimateSpecRecord, mixed_gamma_to_mixed_int
from .value_function import ValueEstimate, ValueSearch, check_value_dissipation, estimate_value_function

__all__ = [
    "AUXILIARY_GAIN",
    "DOMINATION",
    "KL",
    "CheckReport",
    "ComparisonSystem",
    "ComparisonTrajectory",
    "EstimateForm",
    "EstimateHandlerFactory",
    "EstimateSpec",
    "EstimateSpecRecord",
    "Falsifier",
    "ForwardCompleteBound",
    "GradientMode",
    "SearchEncoding",
    "ValueEstimate",
    "ValueSearch",
    "Verdict",
    "Witness",
    "auxiliary_gain_check",
    "build_report",
    "build_sample_report",
    "certify_phi",
    "check_comparison_principle",
    "check_domination",
    "check_forward_complete_bound",
    "check_integral",
    "check_lyapunov_dissipation",
    "check_pointwise",
    "check_trajectory",
    "check_value_dissipation",
    "comparison_bound",
    "default_epsilon",
    "dissipation_samples",
    "energy_limited_signal",
    "estimate_value_function",
    "falsify",
    "gradient_agreement",
    "mixed_gamma_to_mixed_int",
    "reach_bound_m",
    "replay_witness",
    "witness_replays",
]
