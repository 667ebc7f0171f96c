"""Rigid-body transform algebra.

Rotations live in three interchangeable encodings: 3x3 orthonormal matrices,
rotation vectors (axis * angle, radians, canonical magnitude <= pi) and unit
quaternions in (x, y, z, w) order at the file-format boundary. Everything here
is a pure function of immutable values.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NotARotationError

# Below this angle the closed-form Rodrigues / log expressions are replaced by
# their series expansions to avoid 0/0.
SMALL_ANGLE = 1e-8

# Tolerance of the orthonormality check applied when constructing a Transform.
ROTATION_ENTRY_TOL = 1e-9


def skew(v: np.ndarray) -> np.ndarray:
    """Cross-product matrix: skew(v) @ u == cross(v, u)."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def is_rotation(m: np.ndarray, tol: float = 1e-6) -> bool:
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3):
        return False
    if not np.all(np.abs(m.T @ m - np.eye(3)) <= tol):
        return False
    return bool(np.linalg.det(m) > 0.0)


def rotvec_to_matrix(r: np.ndarray) -> np.ndarray:
    """Rotation matrix of an axis-angle vector (Rodrigues formula)."""
    r = np.asarray(r, dtype=float)
    angle = np.linalg.norm(r)
    K = skew(r)
    if angle < SMALL_ANGLE:
        # I + K + K^2/2, exact to O(angle^3)
        return np.eye(3) + K + 0.5 * (K @ K)
    K = K / angle
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


def matrix_to_quat(m: np.ndarray) -> np.ndarray:
    """Unit quaternion (x, y, z, w) of a rotation matrix, with w >= 0.

    Uses the largest-pivot branch selection, stable for all rotations
    including angles near pi.
    """
    m = np.asarray(m, dtype=float)
    t = np.trace(m)
    if m[2, 2] < 0:
        if m[0, 0] > m[1, 1]:
            s = 1.0 + m[0, 0] - m[1, 1] - m[2, 2]
            q = np.array([s, m[0, 1] + m[1, 0], m[2, 0] + m[0, 2], m[2, 1] - m[1, 2]])
        else:
            s = 1.0 - m[0, 0] + m[1, 1] - m[2, 2]
            q = np.array([m[0, 1] + m[1, 0], s, m[1, 2] + m[2, 1], m[0, 2] - m[2, 0]])
    else:
        if m[0, 0] < -m[1, 1]:
            s = 1.0 - m[0, 0] - m[1, 1] + m[2, 2]
            q = np.array([m[2, 0] + m[0, 2], m[1, 2] + m[2, 1], s, m[1, 0] - m[0, 1]])
        else:
            s = 1.0 + t
            q = np.array([m[2, 1] - m[1, 2], m[0, 2] - m[2, 0], m[1, 0] - m[0, 1], s])
    q = q / (2.0 * np.sqrt(s))
    if q[3] < 0:
        q = -q
    return q


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    """Rotation matrix of a quaternion in (x, y, z, w) order.

    The quaternion is normalized first, so file-format round-off is absorbed.
    """
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q)
    if n == 0.0:
        raise NotARotationError("zero-norm quaternion")
    x, y, z, w = q / n
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )


def _pi_tie_break(r: np.ndarray) -> np.ndarray:
    """For a half-turn both r and -r encode the same rotation; pick the one
    whose last nonzero component is positive."""
    for c in (r[2], r[1], r[0]):
        if c != 0.0:
            return r if c > 0 else -r
    return r


def matrix_to_rotvec(m: np.ndarray, check: bool = True) -> np.ndarray:
    """Rotation vector (|r| <= pi) of a rotation matrix.

    Goes through the quaternion form, which keeps the extraction well
    conditioned near the angle-pi singularity of the direct log formula.
    """
    m = np.asarray(m, dtype=float)
    if check and not is_rotation(m):
        raise NotARotationError("matrix is not orthonormal with det +1 (tol 1e-6)")
    q = matrix_to_quat(m)
    v, w = q[:3], q[3]
    s = np.linalg.norm(v)
    if s < SMALL_ANGLE:
        # angle ~ 2s/w; first-order axis*angle
        return v * (2.0 / w)
    angle = 2.0 * np.arctan2(s, w)
    r = v * (angle / s)
    if np.pi - angle < 1e-12:
        r = _pi_tie_break(r)
    return r


def canonical_rotvec(r: np.ndarray) -> np.ndarray:
    """Fold a rotation vector to magnitude in [0, pi].

    Angles above pi are re-expressed around the antipodal axis; exact
    half-turns keep their sign (see matrix_to_rotvec for the extraction
    tie-break).
    """
    r = np.asarray(r, dtype=float)
    angle = np.linalg.norm(r)
    if angle <= np.pi:
        return r
    folded = np.mod(angle, 2.0 * np.pi)
    if folded > np.pi:
        folded -= 2.0 * np.pi
    return r * (folded / angle)


def euler_zyx_to_matrix(angles: np.ndarray) -> np.ndarray:
    """Rotation matrix from intrinsic Z-Y-X Euler angles (yaw, pitch, roll)."""
    yaw, pitch, roll = np.asarray(angles, dtype=float)
    cy, sy = np.cos(yaw), np.sin(yaw)
    cp, sp = np.cos(pitch), np.sin(pitch)
    cr, sr = np.cos(roll), np.sin(roll)
    rz = np.array([[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]])
    ry = np.array([[cp, 0.0, sp], [0.0, 1.0, 0.0], [-sp, 0.0, cp]])
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cr, -sr], [0.0, sr, cr]])
    return rz @ ry @ rx


def matrix_to_euler_zyx(m: np.ndarray) -> np.ndarray:
    """Inverse of euler_zyx_to_matrix away from the pitch = +-pi/2 gimbal lock."""
    m = np.asarray(m, dtype=float)
    pitch = np.arcsin(np.clip(-m[2, 0], -1.0, 1.0))
    if np.cos(pitch) > 1e-9:
        yaw = np.arctan2(m[1, 0], m[0, 0])
        roll = np.arctan2(m[2, 1], m[2, 2])
    else:
        yaw = np.arctan2(-m[0, 1], m[1, 1])
        roll = 0.0
    return np.array([yaw, pitch, roll])


def project_to_so3(m: np.ndarray) -> np.ndarray:
    """Nearest rotation matrix (polar decomposition via SVD)."""
    u, _, vt = np.linalg.svd(np.asarray(m, dtype=float))
    d = np.sign(np.linalg.det(u @ vt))
    return u @ np.diag([1.0, 1.0, d]) @ vt


def fit_rotation(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Rotation R minimizing sum ||R src_k - dst_k||^2 (through the origin).

    src, dst: (K, 3) arrays of paired vectors. Classic orthogonal-Procrustes
    solution with the determinant corrected to +1.
    """
    h = np.asarray(dst, dtype=float).T @ np.asarray(src, dtype=float)
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(u @ vt))
    return u @ np.diag([1.0, 1.0, d]) @ vt


def rotation_jacobian(r: np.ndarray) -> np.ndarray:
    """Derivative of the rotation matrix w.r.t. its rotation vector.

    Returns D with shape (3, 3, 3) where D[i] = dR/dr_i, using the closed
    form D[i] = ((r_i [r]x + [r x (I - R) e_i]x) / |r|^2) R, which tends to
    [e_i]x as r -> 0.
    """
    r = np.asarray(r, dtype=float)
    n2 = float(r @ r)
    if n2 < SMALL_ANGLE**2:
        return np.stack([skew(e) for e in np.eye(3)])
    R = rotvec_to_matrix(r)
    rx = skew(r)
    i_minus_r = np.eye(3) - R
    out = np.empty((3, 3, 3))
    for i in range(3):
        w = r[i] * rx + skew(np.cross(r, i_minus_r[:, i]))
        out[i] = (w / n2) @ R
    return out


@dataclass(frozen=True)
class Transform:
    """A rigid-body transform: orthonormal rotation plus translation in meters.

    Immutable; the arrays are copied and marked read-only. Construction
    verifies orthonormality entry-wise to 1e-9 unless check=False (reserved
    for hot paths that build rotations from already-verified algebra).
    """

    rotation: np.ndarray
    translation: np.ndarray
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        rot = np.array(self.rotation, dtype=float)
        tr = np.array(self.translation, dtype=float).reshape(3)
        if self.check:
            if rot.shape != (3, 3):
                raise NotARotationError(f"rotation must be 3x3, got {rot.shape}")
            err = np.abs(rot.T @ rot - np.eye(3)).max()
            if err > ROTATION_ENTRY_TOL or abs(np.linalg.det(rot) - 1.0) > ROTATION_ENTRY_TOL:
                raise NotARotationError(
                    f"rotation fails orthonormality check (max entry error {err:.3e})"
                )
        rot.setflags(write=False)
        tr.setflags(write=False)
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", tr)

    @staticmethod
    def identity() -> "Transform":
        return Transform(np.eye(3), np.zeros(3), check=False)

    @staticmethod
    def from_rotvec(r: np.ndarray, t: np.ndarray) -> "Transform":
        return Transform(rotvec_to_matrix(r), t, check=False)

    @staticmethod
    def from_quat(q_xyzw: np.ndarray, t: np.ndarray) -> "Transform":
        return Transform(quat_to_matrix(q_xyzw), t, check=False)

    @staticmethod
    def from_matrix(m: np.ndarray) -> "Transform":
        m = np.asarray(m, dtype=float)
        if m.shape != (4, 4) or np.abs(m[3] - np.array([0, 0, 0, 1.0])).max() > 1e-12:
            raise NotARotationError("expected a homogeneous 4x4 matrix")
        return Transform(m[:3, :3], m[:3, 3])

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def rotvec(self) -> np.ndarray:
        return matrix_to_rotvec(self.rotation, check=False)

    def quat(self) -> np.ndarray:
        return matrix_to_quat(self.rotation)

    def compose(self, other: "Transform") -> "Transform":
        return Transform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
            check=False,
        )

    def __matmul__(self, other: "Transform") -> "Transform":
        return self.compose(other)

    def inverse(self) -> "Transform":
        rt = self.rotation.T
        return Transform(rt, -(rt @ self.translation), check=False)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Map one point (3,) or a stack (N, 3) through the transform."""
        p = np.asarray(points, dtype=float)
        return p @ self.rotation.T + self.translation

    def reorthonormalized(self) -> "Transform":
        """Project the rotation back onto SO(3); use every ~1000 compositions
        in long chains to keep round-off from accumulating."""
        return Transform(project_to_so3(self.rotation), self.translation, check=False)

    def almost_equal(self, other: "Transform", tol: float = 1e-12) -> bool:
        return (
            np.abs(self.rotation - other.rotation).max() <= tol
            and np.abs(self.translation - other.translation).max() <= tol
        )


def compose(a: Transform, b: Transform) -> Transform:
    """Product a . b as homogeneous matrices."""
    return a.compose(b)


def inverse(t: Transform) -> Transform:
    return t.inverse()
