"""Flow-matching policy training on 2-D toy tasks.

Thin re-export of the compiled core. Vectors are plain lists of floats,
matrices nested lists; every function documents itself via --help-style
docstrings on the C++ side.
"""

from ._core import (
    AdamState,
    Arc,
    CalibrationReport,
    Checkpoint,
    CompatibilityError,
    ConfigError,
    GaussianTask,
    InputError,
    NetSpec,
    NumericError,
    ParamVector,
    RingTask,
    Schedule,
    Trajectory,
    TrainingError,
    Transition,
    adam_step,
    advantages,
    calibrate,
    cfm_loss,
    chains,
    clip_term,
    dpo_margin_loss,
    forward_velocity,
    init_params,
    interpolate,
    load_checkpoint,
    make_adam_state,
    mode_angle,
    num_conditions,
    num_steps,
    ode_sample,
    ode_sample_field,
    oracle_marginal,
    oracle_velocity,
    param_count,
    pretrain,
    qa_region_reward,
    region_margin,
    ring_similarity,
    sample_data,
    save_checkpoint,
    sde_mean,
    sde_sample,
    sde_sample_field,
    sigma,
    step_kl,
    task_dim,
    time_embedding,
    transition_logpdf,
    uniform_schedule,
    validate_task,
)

__all__ = [name for name in dir() if not name.startswith("_")]
