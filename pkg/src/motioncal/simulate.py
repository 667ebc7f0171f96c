"""Synthetic trajectory generation and SLAM-style noise models.

A ground-vehicle-like base trajectory is generated for the first sensor, the
second sensor's trajectory follows from the ground-truth extrinsic, and three
noise patterns can then corrupt either trajectory:

* gaussian -- every pose right-multiplied by a small random transform whose
  Euler angles have variance 2*sigma2 and translation components variance
  sigma2,
* outliers -- a fraction of poses gets a random world-position jump with
  per-component variance 0.02 (rotations untouched),
* drift    -- position error growing linearly with distance traveled along
  one world axis, at a configurable rate in meters per meter moved.

The mixed pattern stacks all three at the benchmark's median severities. All
operations are deterministic functions of their seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import LengthMismatchError
from .se3 import Transform, euler_zyx_to_matrix, fit_rotation, quat_to_matrix, matrix_to_quat
from .solvers import Extrinsic
from .trajectory import Trajectory

SeedLike = "int | np.random.SeedSequence"

# Severities of the mixed-noise pattern (the medians of the swept ranges).
MIXED_GAUSSIAN_SIGMA2 = 5e-3
MIXED_OUTLIER_FRACTION = 0.05
MIXED_OUTLIER_SIGMA2 = 0.02
MIXED_DRIFT_RATE = 0.025


@dataclass(frozen=True)
class BaseTrajectoryConfig:
    """Knobs of the ground-vehicle trajectory generator.

    The vehicle starts on level ground and snakes forward: the heading sweeps
    side to side (a winding road) with a small bounded random walk on top,
    and pitch/roll undulate with the terrain. Translations are dominated by
    the forward axis and rotations by yaw; vertical motion and tilt angles
    stay an order of magnitude smaller, which mirrors how real ground
    vehicles move. Defaults are sized so that the mixed-noise pattern at its
    standard severities lands near the realistic SLAM error range (mean RMS
    ATE of roughly 0.2-0.5 m over a 500-pose trajectory).
    """

    step_range: tuple[float, float] = (0.04, 0.14)  # forward meters per step
    heading_osc: tuple[float, float] = (0.6, 1.1)   # rad, heading sweep amplitude
    heading_period: tuple[float, float] = (80.0, 200.0)  # steps per sweep cycle
    yaw_walk_std: float = 0.01                      # rad, random walk on the yaw increment
    yaw_walk_clamp: float = 0.05                    # rad, cap of the walk component
    yaw_step_clamp: float = 0.2                     # rad, cap of the total yaw increment
    pitch_amp: tuple[float, float] = (0.05, 0.07)   # rad, terrain pitch amplitude
    roll_amp: tuple[float, float] = (0.03, 0.05)    # rad, terrain roll amplitude
    tilt_period: tuple[float, float] = (16.0, 26.0) # steps per terrain cycle
    tilt_jitter: float = 0.005                      # rad, per-pose tilt noise
    climb_frac: float = 0.05                        # vertical step std / mean forward step
    dt: float = 0.1                                 # seconds between poses

    @property
    def climb_std(self) -> float:
        return self.climb_frac * 0.5 * (self.step_range[0] + self.step_range[1])


@dataclass(frozen=True)
class NoiseSpec:
    """Full description of one noise condition, plus the seed that drives it."""

    gaussian_sigma2: float = 0.0
    outlier_fraction: float = 0.0
    outlier_sigma2: float = MIXED_OUTLIER_SIGMA2
    drift_rate: float = 0.0
    drift_axis: str = "random"  # 'x' | 'y' | 'z' | 'random'
    seed: int = 0

    def __post_init__(self):
        if self.gaussian_sigma2 < 0 or self.outlier_sigma2 < 0 or self.drift_rate < 0:
            raise ValueError("variances and drift rate must be non-negative")
        if not 0.0 <= self.outlier_fraction <= 1.0:
            raise ValueError("outlier_fraction must lie in [0, 1]")
        if self.drift_axis not in ("x", "y", "z", "random"):
            raise ValueError(f"bad drift_axis {self.drift_axis!r}")

    def to_dict(self) -> dict:
        return {
            "gaussian_sigma2": self.gaussian_sigma2,
            "outlier_fraction": self.outlier_fraction,
            "outlier_sigma2": self.outlier_sigma2,
            "drift_rate": self.drift_rate,
            "drift_axis": self.drift_axis,
            "seed": self.seed,
        }

    @staticmethod
    def from_dict(data: dict) -> "NoiseSpec":
        return NoiseSpec(**data)


@dataclass(frozen=True)
class GroundTruth:
    """A consistent synthetic dataset: the true extrinsic and both sensors'
    noiseless trajectories (clean2 = clean1 . x_gt pose by pose)."""

    x_gt: Extrinsic
    clean1: Trajectory
    clean2: Trajectory


def generate_base_trajectory(
    num_poses: int,
    seed,
    config: BaseTrajectoryConfig = BaseTrajectoryConfig(),
) -> Trajectory:
    """Random smooth vehicle trajectory; deterministic per seed."""
    if num_poses < 2:
        raise ValueError("need at least 2 poses")
    rng = np.random.default_rng(seed)
    lo, hi = config.step_range

    yaw = rng.uniform(-np.pi, np.pi)
    sweep = rng.uniform(*config.heading_osc)
    sweep_period = rng.uniform(*config.heading_period)
    sweep_amp = 2.0 * np.pi * sweep / sweep_period
    sweep_phase = rng.uniform(0.0, 2.0 * np.pi)
    pitch_amp = rng.uniform(*config.pitch_amp)
    pitch_period = rng.uniform(*config.tilt_period)
    roll_amp = rng.uniform(*config.roll_amp)
    roll_period = rng.uniform(*config.tilt_period)
    walk = 0.0
    position = np.zeros(3)

    stamps = np.arange(num_poses) * config.dt
    rotations = np.empty((num_poses, 3, 3))
    translations = np.empty((num_poses, 3))
    for k in range(num_poses):
        # terrain phase starts at zero: the vehicle sets off on level ground
        pitch = pitch_amp * np.sin(2.0 * np.pi * k / pitch_period)
        roll = roll_amp * np.sin(2.0 * np.pi * k / roll_period)
        jitter = rng.normal(0.0, config.tilt_jitter, 2)
        rotations[k] = euler_zyx_to_matrix((yaw, pitch + jitter[0], roll + jitter[1]))
        translations[k] = position
        if k == num_poses - 1:
            break
        walk = np.clip(
            walk + rng.normal(0.0, config.yaw_walk_std),
            -config.yaw_walk_clamp,
            config.yaw_walk_clamp,
        )
        yaw_inc = sweep_amp * np.sin(2.0 * np.pi * k / sweep_period + sweep_phase) + walk
        yaw += np.clip(yaw_inc, -config.yaw_step_clamp, config.yaw_step_clamp)
        step = np.array([rng.uniform(lo, hi), 0.0, rng.normal(0.0, config.climb_std)])
        position = position + rotations[k] @ step
    return Trajectory(stamps, rotations, translations)


def random_extrinsic(seed, max_translation: float = 1.5) -> Extrinsic:
    """Uniformly random rotation with a box-uniform translation; stands in
    for an arbitrary sensor-to-sensor mounting."""
    rng = np.random.default_rng(seed)
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    t = rng.uniform(-max_translation, max_translation, 3)
    return Extrinsic.from_transform(Transform(quat_to_matrix(q), t, check=False))


def derive_second_trajectory(base: Trajectory, x_gt: Extrinsic) -> Trajectory:
    """Second sensor's poses: T2_j = T1_j . X, which makes the hand-eye
    relation hold exactly for every pair."""
    rx = x_gt.rotation
    rotations = base.rotations @ rx
    translations = base.translations + np.einsum("kab,b->ka", base.rotations, x_gt.t)
    return Trajectory(base.stamps, rotations, translations)


def make_ground_truth(
    num_poses: int,
    seed,
    config: BaseTrajectoryConfig = BaseTrajectoryConfig(),
    x_gt: Extrinsic | None = None,
) -> GroundTruth:
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    base_ss, gt_ss = ss.spawn(2)
    clean1 = generate_base_trajectory(num_poses, base_ss, config)
    if x_gt is None:
        x_gt = random_extrinsic(gt_ss)
    return GroundTruth(x_gt, clean1, derive_second_trajectory(clean1, x_gt))


def apply_gaussian(traj: Trajectory, sigma2: float, seed) -> Trajectory:
    """Right-multiply every pose with an independent small random transform:
    Euler angles ~ N(0, 2*sigma2), translation components ~ N(0, sigma2)."""
    if sigma2 < 0:
        raise ValueError("sigma2 must be non-negative")
    if sigma2 == 0.0:
        return traj
    rng = np.random.default_rng(seed)
    n = len(traj)
    angles = rng.normal(0.0, np.sqrt(2.0 * sigma2), (n, 3))
    jitter = rng.normal(0.0, np.sqrt(sigma2), (n, 3))
    rotations = np.empty_like(traj.rotations)
    for k in range(n):
        rotations[k] = traj.rotations[k] @ euler_zyx_to_matrix(angles[k])
    translations = traj.translations + np.einsum("kab,kb->ka", traj.rotations, jitter)
    return Trajectory(traj.stamps, rotations, translations)


def apply_outliers(
    traj: Trajectory, fraction: float, sigma2: float, seed
) -> tuple[Trajectory, np.ndarray]:
    """Add world-position jumps (components ~ N(0, sigma2)) to a uniformly
    chosen floor(fraction * N) poses; rotations stay untouched. Returns the
    noisy trajectory and the sorted affected indices."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must lie in [0, 1]")
    n = len(traj)
    count = int(np.floor(fraction * n))
    if count == 0:
        return traj, np.array([], dtype=int)
    rng = np.random.default_rng(seed)
    indices = rng.choice(n, size=count, replace=False)
    jumps = rng.normal(0.0, np.sqrt(sigma2), (count, 3))
    translations = traj.translations.copy()
    translations[indices] += jumps
    order = np.argsort(indices)
    return Trajectory(traj.stamps, traj.rotations, translations), indices[order]


def apply_drift(traj: Trajectory, rate: float, axis: str, seed) -> Trajectory:
    """Shift world positions along one axis by rate * (path length so far).

    Path length is the cumulative norm of the input's position steps, so the
    first pose never moves. axis 'random' picks uniformly among x, y, z."""
    if rate < 0:
        raise ValueError("rate must be non-negative")
    if rate == 0.0:
        return traj
    if axis == "random":
        axis = "xyz"[np.random.default_rng(seed).integers(3)]
    unit = np.zeros(3)
    unit["xyz".index(axis)] = 1.0
    steps = np.linalg.norm(np.diff(traj.translations, axis=0), axis=1)
    path = np.concatenate([[0.0], np.cumsum(steps)])
    translations = traj.translations + rate * path[:, None] * unit
    return Trajectory(traj.stamps, traj.rotations, translations)


def apply_mixed(
    traj: Trajectory,
    seed,
    gaussian_sigma2: float = MIXED_GAUSSIAN_SIGMA2,
    outlier_fraction: float = MIXED_OUTLIER_FRACTION,
    outlier_sigma2: float = MIXED_OUTLIER_SIGMA2,
    drift_rate: float = MIXED_DRIFT_RATE,
    drift_axis: str = "random",
) -> Trajectory:
    """Drift, then outliers, then Gaussian noise, at the benchmark's median
    severities; drift first keeps it a function of the clean path length."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    drift_ss, outlier_ss, gauss_ss = ss.spawn(3)
    out = apply_drift(traj, drift_rate, drift_axis, drift_ss)
    out, _ = apply_outliers(out, outlier_fraction, outlier_sigma2, outlier_ss)
    return apply_gaussian(out, gaussian_sigma2, gauss_ss)


def apply_noise(traj: Trajectory, spec: NoiseSpec, stream: int = 0) -> Trajectory:
    """Apply a full NoiseSpec (drift -> outliers -> gaussian). stream
    decorrelates the two sensors of one dataset under a shared spec seed."""
    ss = np.random.SeedSequence((spec.seed, stream))
    drift_ss, outlier_ss, gauss_ss = ss.spawn(3)
    out = apply_drift(traj, spec.drift_rate, spec.drift_axis, drift_ss)
    out, _ = apply_outliers(out, spec.outlier_fraction, spec.outlier_sigma2, outlier_ss)
    return apply_gaussian(out, spec.gaussian_sigma2, gauss_ss)


def rms_ate(reference: Trajectory, estimate: Trajectory) -> float:
    """RMS absolute trajectory error: best rigid alignment (no scale) of the
    estimated positions onto the reference, then the root-mean-square of the
    residual position norms."""
    if len(reference) != len(estimate):
        raise LengthMismatchError(
            f"trajectories differ in length: {len(reference)} vs {len(estimate)}"
        )
    p_ref = reference.translations
    p_est = estimate.translations
    ref_mean = p_ref.mean(axis=0)
    est_mean = p_est.mean(axis=0)
    rot = fit_rotation(p_est - est_mean, p_ref - ref_mean)
    aligned = (p_est - est_mean) @ rot.T + ref_mean
    return float(np.sqrt(np.mean(np.sum((aligned - p_ref) ** 2, axis=1))))


# --------------------------------------------------------------------------
# Dataset manifest: seed, noise spec, and the ground-truth extrinsic as the
# 7 numbers tx ty tz qx qy qz qw.
# --------------------------------------------------------------------------

def extrinsic_to_seven(x: Extrinsic) -> list[float]:
    q = matrix_to_quat(x.rotation)
    return [float(v) for v in (*x.t, *q)]


def extrinsic_from_seven(values) -> Extrinsic:
    values = [float(v) for v in values]
    if len(values) != 7:
        raise ValueError(f"expected 7 numbers tx ty tz qx qy qz qw, got {len(values)}")
    return Extrinsic.from_transform(
        Transform(quat_to_matrix(np.array(values[3:])), np.array(values[:3]), check=False)
    )


@dataclass(frozen=True)
class DatasetManifest:
    seed: int
    noise: NoiseSpec
    ground_truth: list[float]  # tx ty tz qx qy qz qw

    def extrinsic(self) -> Extrinsic:
        return extrinsic_from_seven(self.ground_truth)

    def to_json(self) -> str:
        payload = {
            "seed": self.seed,
            "noise": self.noise.to_dict(),
            "ground_truth_tx_ty_tz_qx_qy_qz_qw": self.ground_truth,
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    @staticmethod
    def from_json(text: str) -> "DatasetManifest":
        payload = json.loads(text)
        return DatasetManifest(
            seed=int(payload["seed"]),
            noise=NoiseSpec.from_dict(payload["noise"]),
            ground_truth=[float(v) for v in payload["ground_truth_tx_ty_tz_qx_qy_qz_qw"]],
        )


def write_manifest(path, manifest: DatasetManifest) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(manifest.to_json())


def read_manifest(path) -> DatasetManifest:
    with open(path, "r", encoding="utf-8") as fh:
        return DatasetManifest.from_json(fh.read())
