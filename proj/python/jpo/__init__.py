"""Joint parameterized optimization of inverse problems."""

from ._core import (
    ProblemSet,
    default_config,
    errorbar,
    evaluate,
    fraction_better,
    generate,
    improvement_split,
    param_count,
    prob_aligned_single,
    prob_aligned_sum,
    prob_majority_exact,
    prob_majority_normal,
    rho_fit,
    rho_predict,
    run_sweep,
    solve,
)

__all__ = [
    "ProblemSet",
    "default_config",
    "errorbar",
    "evaluate",
    "fraction_better",
    "generate",
    "improvement_split",
    "param_count",
    "prob_aligned_single",
    "prob_aligned_sum",
    "prob_majority_exact",
    "prob_majority_normal",
    "rho_fit",
    "rho_predict",
    "run_sweep",
    "solve",
]
