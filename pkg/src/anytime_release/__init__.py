"""Failure-calibrated, always-valid release decisions for generate-verify loops.

Online verifier scores are rank-calibrated against a pool of hard-negative
scores, converted to e-values with a truncated power calibrator, and
multiplied into a wealth process. A candidate is released the first time
wealth reaches ``1 / alpha``; on tasks the pipeline cannot solve this
happens with probability at most ``alpha``.
"""

__version__ = "0.1.0"

from .baselines import (
    entropy_rule,
    entropy_threshold_from_bank,
    first_p_rule,
    mean_token_entropy,
    stability_rule,
)
from .calibrate import CalibratedP, p_floor, tail_p_value
from .cohort import CohortReport, CohortRow, emit_report, evaluate_cohort, load_report
from .evidence import (
    BettingCalibrator,
    ReleaseOutcome,
    WealthState,
    calibrator_new,
    evaluate_calibrator,
    run_wrapper,
    ville_threshold,
    wealth_update,
)
from .gain import (
    GainTrace,
    StepwiseFeasibleSummary,
    gain_decomposition,
    power_margin,
    required_gain,
    step_gain,
    stepwise_feasible_summary,
)
from .oracles import (
    BoundReport,
    NullSimConfig,
    drift_upper_bound,
    naive_stopping_lower_bound,
    power_lower_bound,
    rout_upper_bound,
    simulate_feasible,
    simulate_naive,
    simulate_null,
    simulate_super_uniformity,
    tv_separation_check,
)
from .pool import (
    PoolDiagnostic,
    ReferencePool,
    ScoredCandidate,
    UpperTailRule,
    collect_hard_negatives,
    load_pool,
    pool_diagnostic,
    save_pool,
)
from .trajectory import Trajectory, TrajectoryStep, load_trajectories

__all__ = [
    "BettingCalibrator",
    "BoundReport",
    "CalibratedP",
    "CohortReport",
    "CohortRow",
    "GainTrace",
    "NullSimConfig",
    "PoolDiagnostic",
    "ReferencePool",
    "ReleaseOutcome",
    "ScoredCandidate",
    "StepwiseFeasibleSummary",
    "Trajectory",
    "TrajectoryStep",
    "UpperTailRule",
    "WealthState",
    "calibrator_new",
    "collect_hard_negatives",
    "drift_upper_bound",
    "emit_report",
    "entropy_rule",
    "entropy_threshold_from_bank",
    "evaluate_calibrator",
    "evaluate_cohort",
    "first_p_rule",
    "gain_decomposition",
    "load_pool",
    "load_report",
    "load_trajectories",
    "mean_token_entropy",
    "naive_stopping_lower_bound",
    "p_floor",
    "pool_diagnostic",
    "power_lower_bound",
    "power_margin",
    "required_gain",
    "rout_upper_bound",
    "run_wrapper",
    "save_pool",
    "simulate_feasible",
    "simulate_naive",
    "simulate_null",
    "simulate_super_uniformity",
    "stability_rule",
    "step_gain",
    "stepwise_feasible_summary",
    "tail_p_value",
    "tv_separation_check",
    "ville_threshold",
    "wealth_update",
]
