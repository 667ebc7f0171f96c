"""Trajectories, reference-frame selection, relative motions, and TUM file I/O.

A trajectory is the timestamped world-frame pose sequence of one sensor. The
selection strategies decide which pose i serves as the reference for pose j
when the pairwise relative motions are formed for AX = XB calibration:

* A     -- everything relative to the first pose (i = 0)
* B(n)  -- reference is the n-th previous pose (i = j - n); B(1) is the
           consecutive-pose default used throughout the calibration literature
* C(n)  -- the trajectory is cut into segments of length n and every pose in
           a segment is expressed relative to the segment's first pose (the
           keyframe)
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    LengthMismatchError,
    NonMonotonicTimestampsError,
    TooFewPosesError,
    TrajectoryParseError,
)
from .se3 import Transform, matrix_to_quat, matrix_to_rotvec, quat_to_matrix

# Second singular value of the unit rotation-axis matrix below which the
# motion set cannot observe the full extrinsic (needs >= 2 distinct axes).
DEGENERATE_AXIS_TOL = 1e-3


@dataclass(frozen=True)
class Trajectory:
    """World-frame pose sequence of one sensor, strictly increasing in time."""

    stamps: np.ndarray        # (N,) seconds
    rotations: np.ndarray     # (N, 3, 3)
    translations: np.ndarray  # (N, 3) meters

    def __post_init__(self):
        stamps = np.asarray(self.stamps, dtype=float).reshape(-1)
        rot = np.asarray(self.rotations, dtype=float)
        tr = np.asarray(self.translations, dtype=float)
        n = stamps.shape[0]
        if rot.shape != (n, 3, 3) or tr.shape != (n, 3):
            raise ValueError(f"inconsistent shapes: {stamps.shape}, {rot.shape}, {tr.shape}")
        if n >= 2 and not np.all(np.diff(stamps) > 0):
            raise NonMonotonicTimestampsError("timestamps must be strictly increasing")
        for a in (stamps, rot, tr):
            a.setflags(write=False)
        object.__setattr__(self, "stamps", stamps)
        object.__setattr__(self, "rotations", rot)
        object.__setattr__(self, "translations", tr)

    def __len__(self) -> int:
        return self.stamps.shape[0]

    def pose(self, i: int) -> Transform:
        return Transform(self.rotations[i], self.translations[i], check=False)

    @property
    def positions(self) -> np.ndarray:
        return self.translations

    @staticmethod
    def from_poses(poses: list[tuple[float, Transform]]) -> "Trajectory":
        stamps = np.array([s for s, _ in poses], dtype=float)
        rot = np.stack([p.rotation for _, p in poses]) if poses else np.zeros((0, 3, 3))
        tr = np.stack([p.translation for _, p in poses]) if poses else np.zeros((0, 3))
        return Trajectory(stamps, rot, tr)

    def subset(self, indices: np.ndarray) -> "Trajectory":
        idx = np.asarray(indices, dtype=int)
        return Trajectory(self.stamps[idx], self.rotations[idx], self.translations[idx])


_STRATEGY_RE = re.compile(r"^([ABCabc])(\d*)$")


@dataclass(frozen=True)
class SelectionStrategy:
    """Reference-frame selection policy: kind 'A', 'B' or 'C', with spacing /
    segment length n for B and C."""

    kind: str
    n: int | None = None

    def __post_init__(self):
        if self.kind not in ("A", "B", "C"):
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        if self.kind == "A":
            if self.n is not None:
                raise ValueError("strategy A takes no spacing parameter")
        else:
            if self.n is None or self.n < 1:
                raise ValueError(f"strategy {self.kind} needs n >= 1")

    @staticmethod
    def parse(label: str) -> "SelectionStrategy":
        m = _STRATEGY_RE.match(label.strip())
        if not m:
            raise ValueError(f"cannot parse strategy {label!r} (expected A, B<n> or C<n>)")
        kind = m.group(1).upper()
        digits = m.group(2)
        if kind == "A":
            if digits:
                raise ValueError("strategy A takes no spacing parameter")
            return SelectionStrategy("A")
        if not digits:
            raise ValueError(f"strategy {kind} needs a spacing, e.g. {kind}5")
        return SelectionStrategy(kind, int(digits))

    def __str__(self) -> str:
        return self.kind if self.kind == "A" else f"{self.kind}{self.n}"


def select_pairs(length: int, strategy: SelectionStrategy) -> np.ndarray:
    """Index pairs (i, j), i < j, for the given trajectory length.

    Returns an (K, 2) int array sorted by j. Raises TooFewPosesError when the
    strategy yields no pairs (length < 2, or B(n) with length <= n).
    """
    pairs: list[tuple[int, int]] = []
    if length >= 2:
        if strategy.kind == "A":
            pairs = [(0, j) for j in range(1, length)]
        elif strategy.kind == "B":
            n = strategy.n
            pairs = [(j - n, j) for j in range(n, length)]
        else:  # C
            n = strategy.n
            for start in range(0, length, n):
                end = min(start + n - 1, length - 1)
                pairs.extend((start, j) for j in range(start + 1, end + 1))
    if not pairs:
        raise TooFewPosesError(
            f"strategy {strategy} yields no pairs for a {length}-pose trajectory"
        )
    return np.array(pairs, dtype=np.int64)


@dataclass(frozen=True)
class MotionPairSet:
    """The selected pairs (i, j) together with both sensors' relative motions.

    motions A come from sensor 1, motions B from sensor 2:
    A_k = inv(T1_i) . T1_j and B_k = inv(T2_i) . T2_j for pair k = (i, j).
    """

    pairs: np.ndarray   # (K, 2) int
    rot_a: np.ndarray   # (K, 3, 3)
    tr_a: np.ndarray    # (K, 3)
    rot_b: np.ndarray   # (K, 3, 3)
    tr_b: np.ndarray    # (K, 3)

    def __post_init__(self):
        for name in ("pairs", "rot_a", "tr_a", "rot_b", "tr_b"):
            a = np.asarray(getattr(self, name))
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    def __len__(self) -> int:
        return self.pairs.shape[0]

    def motion_a(self, k: int) -> Transform:
        return Transform(self.rot_a[k], self.tr_a[k], check=False)

    def motion_b(self, k: int) -> Transform:
        return Transform(self.rot_b[k], self.tr_b[k], check=False)


def _relative(traj: Trajectory, i_idx: np.ndarray, j_idx: np.ndarray):
    ri = traj.rotations[i_idx]
    rj = traj.rotations[j_idx]
    # inv(T_i) . T_j: R = Ri^T Rj, t = Ri^T (tj - ti)
    rot = np.einsum("kba,kbc->kac", ri, rj)
    tr = np.einsum("kba,kb->ka", ri, traj.translations[j_idx] - traj.translations[i_idx])
    return rot, tr


def relative_motions(t1: Trajectory, t2: Trajectory, pairs: np.ndarray) -> MotionPairSet:
    """Per-pair relative motions of two index-corresponded trajectories."""
    if len(t1) != len(t2):
        raise LengthMismatchError(f"trajectories differ in length: {len(t1)} vs {len(t2)}")
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    i_idx, j_idx = pairs[:, 0], pairs[:, 1]
    rot_a, tr_a = _relative(t1, i_idx, j_idx)
    rot_b, tr_b = _relative(t2, i_idx, j_idx)
    return MotionPairSet(pairs, rot_a, tr_a, rot_b, tr_b)


@dataclass(frozen=True)
class MotionDiagnostic:
    """Observability diagnostic of a motion pair set."""

    axis_singular_values: tuple[float, float]  # two largest, of the axis matrix
    translation_norm_range: tuple[float, float]
    degenerate: bool


def motion_sufficiency(mps: MotionPairSet) -> MotionDiagnostic:
    """Check whether the pair set carries enough rotation to observe the
    extrinsic: the unit rotation axes of the A motions must span at least two
    directions. Pure-translation pairs contribute a zero axis."""
    k = len(mps)
    axes = np.zeros((k, 3))
    for idx in range(k):
        r = matrix_to_rotvec(mps.rot_a[idx], check=False)
        angle = np.linalg.norm(r)
        if angle > 1e-12:
            axes[idx] = r / angle
    sv = np.linalg.svd(axes.T, compute_uv=False)
    sv = np.concatenate([sv, np.zeros(2)])[:2]
    norms = np.linalg.norm(mps.tr_a, axis=1)
    lo, hi = (float(norms.min()), float(norms.max())) if k else (0.0, 0.0)
    return MotionDiagnostic(
        axis_singular_values=(float(sv[0]), float(sv[1])),
        translation_norm_range=(lo, hi),
        degenerate=bool(sv[1] < DEGENERATE_AXIS_TOL),
    )


# --------------------------------------------------------------------------
# TUM trajectory text format: "timestamp tx ty tz qx qy qz qw" per line,
# '#' starts a comment, blank lines ignored.
# --------------------------------------------------------------------------

def load_tum(path) -> Trajectory:
    stamps: list[float] = []
    rots: list[np.ndarray] = []
    trs: list[np.ndarray] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            if len(fields) != 8:
                raise TrajectoryParseError(
                    f"expected 8 fields, got {len(fields)}", line=lineno
                )
            try:
                values = [float(f) for f in fields]
            except ValueError as exc:
                raise TrajectoryParseError(str(exc), line=lineno) from None
            stamps.append(values[0])
            trs.append(np.array(values[1:4]))
            q = np.array(values[4:8])
            nq = np.linalg.norm(q)
            if nq == 0.0:
                raise TrajectoryParseError("zero-norm quaternion", line=lineno)
            rots.append(quat_to_matrix(q / nq))
    if not stamps:
        raise TrajectoryParseError(f"no poses found in {path}")
    s = np.array(stamps)
    if len(s) >= 2 and not np.all(np.diff(s) > 0):
        raise NonMonotonicTimestampsError(f"{path}: timestamps not strictly increasing")
    return Trajectory(s, np.stack(rots), np.stack(trs))


def save_tum(traj: Trajectory, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# timestamp tx ty tz qx qy qz qw\n")
        for i in range(len(traj)):
            q = matrix_to_quat(traj.rotations[i])
            t = traj.translations[i]
            fields = [traj.stamps[i], t[0], t[1], t[2], q[0], q[1], q[2], q[3]]
            fh.write(" ".join(f"{v:.17g}" for v in fields) + "\n")


def associate_by_time(
    t1: Trajectory, t2: Trajectory, tolerance: float = 0.02
) -> tuple[np.ndarray, np.ndarray, int]:
    """One-to-one nearest-neighbor timestamp association.

    Returns (indices into t1, indices into t2, dropped count) where dropped
    counts the poses of the shorter trajectory left unmatched within the
    tolerance. Matches are picked greedily by smallest time difference, so the
    result is deterministic.
    """
    candidates: list[tuple[float, int, int]] = []
    j_all = t2.stamps
    for i, s in enumerate(t1.stamps):
        j = int(np.argmin(np.abs(j_all - s)))
        dt = abs(j_all[j] - s)
        if dt <= tolerance:
            candidates.append((float(dt), i, j))
    candidates.sort()
    used_i: set[int] = set()
    used_j: set[int] = set()
    matches: list[tuple[int, int]] = []
    for _, i, j in candidates:
        if i in used_i or j in used_j:
            continue
        used_i.add(i)
        used_j.add(j)
        matches.append((i, j))
    matches.sort()
    idx1 = np.array([m[0] for m in matches], dtype=int)
    idx2 = np.array([m[1] for m in matches], dtype=int)
    dropped = min(len(t1), len(t2)) - len(matches)
    return idx1, idx2, dropped
