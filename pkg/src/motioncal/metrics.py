"""Calibration error metrics.

Two relative metrics measure self-consistency of the estimate against the
motion pairs (available in the field, where no ground truth exists) and two
absolute metrics measure the true error against a known ground truth
extrinsic. Angles are radians here; degrees appear only in CSV/CLI output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .se3 import matrix_to_rotvec, rotvec_to_matrix
from .solvers import Extrinsic, _residual_blocks
from .trajectory import MotionPairSet


def relative_translation_error(x: Extrinsic, mps: MotionPairSet) -> float:
    """Mean norm of the per-pair translation consistency residual
    R_Ak t + t_Ak - (R_x t_Bk + t)."""
    _, tr_res = _residual_blocks(x.theta, x.t, mps)
    return float(np.linalg.norm(tr_res, axis=1).mean())


def relative_rotation_error(x: Extrinsic, mps: MotionPairSet) -> float:
    """Mean geodesic angle between R_Ak R_x and R_x R_Bk."""
    rx = rotvec_to_matrix(x.theta)
    total = 0.0
    for k in range(len(mps)):
        m = (rx @ mps.rot_b[k]).T @ (mps.rot_a[k] @ rx)
        total += float(np.linalg.norm(matrix_to_rotvec(m, check=False)))
    return total / len(mps)


def absolute_translation_error(x: Extrinsic, gt: Extrinsic) -> float:
    return float(np.linalg.norm(gt.t - x.t))


def absolute_rotation_error(x: Extrinsic, gt: Extrinsic) -> float:
    m = rotvec_to_matrix(x.theta).T @ rotvec_to_matrix(gt.theta)
    return float(np.linalg.norm(matrix_to_rotvec(m, check=False)))


@dataclass(frozen=True)
class ErrorReport:
    """The four calibration error metrics; absolute ones are None when no
    ground truth was supplied."""

    e_rt: float                 # meters
    e_rR: float                 # radians
    e_at: float | None = None   # meters
    e_aR: float | None = None   # radians

    @property
    def e_rR_deg(self) -> float:
        return float(np.degrees(self.e_rR))

    @property
    def e_aR_deg(self) -> float | None:
        return None if self.e_aR is None else float(np.degrees(self.e_aR))


def error_report(
    x: Extrinsic, mps: MotionPairSet, gt: Extrinsic | None = None
) -> ErrorReport:
    e_at = e_aR = None
    if gt is not None:
        e_at = absolute_translation_error(x, gt)
        e_aR = absolute_rotation_error(x, gt)
    return ErrorReport(
        e_rt=relative_translation_error(x, mps),
        e_rR=relative_rotation_error(x, mps),
        e_at=e_at,
        e_aR=e_aR,
    )
