"""Hybrid analytical / data-driven forward-kinematic modeling toolkit.

A desk-scale pipeline for a tendon-driven articulated robot: a simulated
backlash-afflicted plant generates data, Gaussian Process Regression in
three prior configurations learns the kinematics, and a confidence-weighted
fusion rule blends the learned model with an analytical one.
"""

from .gp import (
    KernelSpec,
    GpModel,
    Posterior,
    kernel_eval,
    fit,
    predict,
    predict_batch,
    log_marginal_likelihood,
    optimize_hyperparams,
)
from .kinematics import (
    DhRow,
    KinematicChain,
    MotorState,
    PlantState,
    forward_kinematics,
    analytical_model,
    plant_step,
    default_microiges_chain,
    wrong_analytical_chain,
)
from .trajectories import (
    ChirpParams,
    QuinticMotion,
    LemniscatePath,
    chirp_eval,
    fit_chirp_amplitudes,
    motion_combinations,
    quintic_s,
    test_motion,
    lemniscate,
)
from .dataset import (
    Sample,
    Dataset,
    CameraIntrinsics,
    CalibrationTransform,
    generate_dataset,
    subsample,
    project_depth_to_3d,
    apply_calibration,
    read_csv,
    write_csv,
)
from .hybrid import (
    VariantKind,
    DataDrivenModel,
    WeightConfig,
    HybridModel,
    train_variant,
    predict_data_driven,
    weight,
    hybrid_predict,
)
from .metrics import rmse, max_abs_error
from .experiment import ExperimentConfig, run_experiment, lemniscate_to_motors

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
