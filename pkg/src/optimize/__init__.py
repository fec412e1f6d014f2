from src.optimize.adam import AdamState, adam_step
from src.optimize.estimator import (
    InitialGuess,
    OptimResult,
    SequenceProblem,
    estimate_joint,
    fit_motion_mlp,
    init_restart,
    save_result,
    select_joint_type,
    sequence_loss_and_grads,
    warm_start,
)

__all__ = [
    "AdamState",
    "adam_step",
    "InitialGuess",
    "OptimResult",
    "SequenceProblem",
    "estimate_joint",
    "fit_motion_mlp",
    "init_restart",
    "save_result",
    "select_joint_type",
    "sequence_loss_and_grads",
    "warm_start",
]
