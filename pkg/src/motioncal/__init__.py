"""Motion-based sensor-to-sensor extrinsic calibration.

Estimates the rigid transform between two rigidly mounted sensors from their
trajectories alone, via the hand-eye relation A X = X B over selected pose
pairs. Ships reference-frame selection strategies, a separable baseline and
two direct nonlinear solvers (with and without outlier rejection), the four
standard error metrics, a synthetic SLAM-noise benchmark generator, a sweep
harness, a CLI and a FastAPI service.
"""

from .errors import (
    CalibrationError,
    DegenerateMotionError,
    InfeasibleWeightSumError,
    LengthMismatchError,
    NonMonotonicTimestampsError,
    NotARotationError,
    TooFewPosesError,
    TrajectoryParseError,
)
from .metrics import (
    ErrorReport,
    absolute_rotation_error,
    absolute_translation_error,
    error_report,
    relative_rotation_error,
    relative_translation_error,
)
from .se3 import Transform, canonical_rotvec, compose, inverse, matrix_to_rotvec, rotvec_to_matrix
from .simulate import (
    BaseTrajectoryConfig,
    DatasetManifest,
    GroundTruth,
    NoiseSpec,
    apply_drift,
    apply_gaussian,
    apply_mixed,
    apply_noise,
    apply_outliers,
    derive_second_trajectory,
    generate_base_trajectory,
    make_ground_truth,
    random_extrinsic,
    rms_ate,
)
from .solvers import (
    DnloParams,
    Extrinsic,
    SolveResult,
    dnl_cost,
    initial_guess,
    residual_matrix,
    solve,
    solve_dnl,
    solve_dnlo,
    solve_separable,
)
from .trajectory import (
    MotionDiagnostic,
    MotionPairSet,
    SelectionStrategy,
    Trajectory,
    associate_by_time,
    load_tum,
    motion_sufficiency,
    relative_motions,
    save_tum,
    select_pairs,
)

__version__ = "0.1.0"
