"""Python bindings for the ensemble actor-critic core library."""

from ._pbac import (
    Env,
    TrainConfig,
    aulc,
    bound_B,
    bound_rhs,
    iqm,
    paired_ttest_onesided,
    quantile_nearest_rank,
    run_gradient_checks,
    run_hand_value_checks,
    run_oracle_suite,
    student_t_sf,
    train,
)

__all__ = [
    "Env",
    "TrainConfig",
    "aulc",
    "bound_B",
    "bound_rhs",
    "iqm",
    "paired_ttest_onesided",
    "quantile_nearest_rank",
    "run_gradient_checks",
    "run_hand_value_checks",
    "run_oracle_suite",
    "student_t_sf",
    "train",
]
