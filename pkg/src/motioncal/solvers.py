"""Extrinsic estimation from motion pairs.

Three solvers over the hand-eye relation A_k X = X B_k:

* separable  -- closed-form baseline: rotation by orthogonal-Procrustes
  alignment of the motions' rotation vectors, then translation from the
  stacked linear system (R_Ak - I) t = R_X t_Bk - t_Ak.
* dnl        -- direct nonlinear least squares on the stacked residual
  matrices M_k = A_k [r, t]_T - [r, t]_T B_k, minimized with a damped
  Gauss-Newton (Levenberg-Marquardt) iteration over (r, t).
* dnlo       -- dnl with per-pair weights alpha in [0, 1]: cost
  sum alpha_k ||M_k||^2 + (1 - alpha_k) c subject to sum alpha >= d, solved
  by alternating an exact weight update with weighted dnl steps. Pairs whose
  squared residual exceeds the tolerance c drop to zero weight, so gross
  outliers stop influencing the fit; d keeps at least a minimum inlier mass.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateMotionError, InfeasibleWeightSumError
from .se3 import (
    Transform,
    canonical_rotvec,
    fit_rotation,
    matrix_to_rotvec,
    rotation_jacobian,
    rotvec_to_matrix,
)
from .trajectory import MotionPairSet, motion_sufficiency

# Levenberg-Marquardt policy: multiplicative damping, x10 on a rejected step,
# /3 on an accepted one.
LM_INITIAL_DAMPING = 1e-3
LM_DAMPING_UP = 10.0
LM_DAMPING_DOWN = 3.0
LM_MAX_ITERS = 200


@dataclass(frozen=True)
class Extrinsic:
    """The unknown sensor-to-sensor transform: rotation vector plus translation."""

    theta: np.ndarray  # (3,) canonical rotation vector, |theta| <= pi
    t: np.ndarray      # (3,) meters

    def __post_init__(self):
        theta = canonical_rotvec(np.asarray(self.theta, dtype=float).reshape(3))
        t = np.array(self.t, dtype=float).reshape(3)
        theta.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "t", t)

    @staticmethod
    def identity() -> "Extrinsic":
        return Extrinsic(np.zeros(3), np.zeros(3))

    @staticmethod
    def from_transform(transform: Transform) -> "Extrinsic":
        return Extrinsic(transform.rotvec(), transform.translation)

    def as_transform(self) -> Transform:
        return Transform(rotvec_to_matrix(self.theta), self.t, check=False)

    @property
    def rotation(self) -> np.ndarray:
        return rotvec_to_matrix(self.theta)


@dataclass(frozen=True)
class DnloParams:
    """Outlier-rejection knobs: squared-residual tolerance c and minimum
    weight sum d (a pair count; None resolves to half the pair count)."""

    c: float = 0.01
    d: float | None = None
    max_outer_iters: int = 50
    convergence_tol: float = 1e-10

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("c must be positive")
        if self.d is not None and self.d < 0:
            raise ValueError("d must be non-negative")

    def resolve_d(self, num_pairs: int) -> float:
        d = num_pairs / 2.0 if self.d is None else float(self.d)
        if d > num_pairs:
            raise InfeasibleWeightSumError(
                f"minimum weight sum d={d} exceeds the {num_pairs} available pairs"
            )
        return d


@dataclass(frozen=True)
class SolveResult:
    extrinsic: Extrinsic
    alpha: np.ndarray        # per-pair weights in [0, 1]; all ones unless dnlo
    cost: float              # final objective value
    iterations: int
    converged: bool


def residual_matrix(x: Extrinsic, a: Transform, b: Transform) -> np.ndarray:
    """The 4x4 consistency residual A [r,t]_T - [r,t]_T B (bottom row zero)."""
    xm = x.as_transform().matrix()
    return a.matrix() @ xm - xm @ b.matrix()


def _residual_blocks(theta: np.ndarray, t: np.ndarray, mps: MotionPairSet):
    """Rotation (K,3,3) and translation (K,3) parts of the residual matrices."""
    R = rotvec_to_matrix(theta)
    rot_res = mps.rot_a @ R - np.einsum("ab,kbc->kac", R, mps.rot_b)
    tr_res = (
        np.einsum("kab,b->ka", mps.rot_a, t)
        + mps.tr_a
        - mps.tr_b @ R.T
        - t
    )
    return rot_res, tr_res


def per_pair_squared_residuals(x: Extrinsic, mps: MotionPairSet) -> np.ndarray:
    """||M_k||_F^2 for every pair."""
    rot_res, tr_res = _residual_blocks(x.theta, x.t, mps)
    return np.einsum("kab,kab->k", rot_res, rot_res) + np.einsum(
        "ka,ka->k", tr_res, tr_res
    )


def dnl_cost(x: Extrinsic, mps: MotionPairSet) -> float:
    """Sum of squared Frobenius norms of the per-pair residual matrices."""
    return float(per_pair_squared_residuals(x, mps).sum())


def _residual_vector(theta, t, mps, sqrt_w):
    rot_res, tr_res = _residual_blocks(theta, t, mps)
    r = np.concatenate([rot_res.reshape(-1, 9), tr_res], axis=1)
    return (r * sqrt_w[:, None]).reshape(-1)


def _jacobian(theta, t, mps, sqrt_w):
    """Analytic Jacobian of the stacked 12-per-pair residual w.r.t. (theta, t)."""
    k = len(mps)
    D = rotation_jacobian(theta)  # (3,3,3), D[i] = dR/dtheta_i
    R = rotvec_to_matrix(theta)
    jac = np.zeros((k, 12, 6))
    # rotation block: d(R_A R - R R_B)/dtheta_i
    term1 = np.einsum("kab,ibc->kaci", mps.rot_a, D)
    term2 = np.einsum("iab,kbc->kaci", D, mps.rot_b)
    jac[:, :9, :3] = (term1 - term2).reshape(k, 9, 3)
    # translation block: d/dtheta = -D_i t_B, d/dt = R_A - I
    jac[:, 9:, :3] = -np.einsum("iab,kb->kai", D, mps.tr_b)
    jac[:, 9:, 3:] = mps.rot_a - np.eye(3)
    jac *= sqrt_w[:, None, None]
    return jac.reshape(-1, 6)


def _lm_minimize(
    mps: MotionPairSet,
    init: Extrinsic,
    weights: np.ndarray | None,
    max_iters: int,
    tol: float,
) -> tuple[Extrinsic, float, int, bool]:
    """Damped Gauss-Newton on the weighted residual; cost is monotone
    non-increasing across accepted steps. Returns (best x, cost, iterations,
    converged)."""
    k = len(mps)
    w = np.ones(k) if weights is None else np.asarray(weights, dtype=float)
    sqrt_w = np.sqrt(w)
    theta = np.array(init.theta)
    t = np.array(init.t)

    r = _residual_vector(theta, t, mps, sqrt_w)
    cost = float(r @ r)
    damping = LM_INITIAL_DAMPING
    converged = False
    iterations = 0
    for iterations in range(1, max_iters + 1):
        if cost <= 1e-30:
            converged = True
            break
        jac = _jacobian(theta, t, mps, sqrt_w)
        g = jac.T @ r
        if np.abs(g).max() < 1e-14 * max(1.0, cost):
            converged = True
            break
        h = jac.T @ jac
        diag = np.diag(h).copy()
        diag[diag < 1e-12] = 1e-12
        accepted = False
        while True:
            try:
                step = np.linalg.solve(h + damping * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                step = None
            if step is not None:
                new_theta = canonical_rotvec(theta + step[:3])
                new_t = t + step[3:]
                new_r = _residual_vector(new_theta, new_t, mps, sqrt_w)
                new_cost = float(new_r @ new_r)
                if new_cost < cost:
                    rel_drop = (cost - new_cost) / max(cost, 1e-300)
                    theta, t, r, cost = new_theta, new_t, new_r, new_cost
                    damping = max(damping / LM_DAMPING_DOWN, 1e-15)
                    accepted = True
                    if rel_drop < tol or np.linalg.norm(step) < 1e-14:
                        converged = True
                    break
            damping *= LM_DAMPING_UP
            if damping > 1e14:
                break
        if not accepted:
            # cannot improve in any direction: treat as a local minimum
            converged = True
            break
        if converged:
            break
    return Extrinsic(theta, t), cost, iterations, converged


def _require_observable(mps: MotionPairSet) -> None:
    diag = motion_sufficiency(mps)
    if diag.degenerate:
        raise DegenerateMotionError(
            "rotation axes of the motion set span fewer than two directions "
            f"(second singular value {diag.axis_singular_values[1]:.3e})"
        )


def solve_separable(mps: MotionPairSet) -> SolveResult:
    """Closed-form baseline: Procrustes rotation on rotation vectors, then a
    linear least-squares translation. Rotation never sees the translations,
    so position-only corruption cannot disturb it."""
    _require_observable(mps)
    k = len(mps)
    vec_a = np.stack([matrix_to_rotvec(mps.rot_a[i], check=False) for i in range(k)])
    vec_b = np.stack([matrix_to_rotvec(mps.rot_b[i], check=False) for i in range(k)])
    rot_x = fit_rotation(vec_b, vec_a)
    lhs = (mps.rot_a - np.eye(3)).reshape(-1, 3)
    rhs = (mps.tr_b @ rot_x.T - mps.tr_a).reshape(-1)
    t, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    x = Extrinsic(matrix_to_rotvec(rot_x, check=False), t)
    return SolveResult(x, np.ones(k), dnl_cost(x, mps), iterations=1, converged=True)


def initial_guess(mps: MotionPairSet) -> Extrinsic:
    """Default initialization for the nonlinear solvers: the separable
    estimate when the motion is observable, identity otherwise."""
    try:
        return solve_separable(mps).extrinsic
    except DegenerateMotionError:
        return Extrinsic.identity()


def solve_dnl(
    mps: MotionPairSet,
    init: Extrinsic | None = None,
    max_iters: int = LM_MAX_ITERS,
    tol: float = 1e-14,
) -> SolveResult:
    """Minimize the summed squared residual matrices over (theta, t)."""
    _require_observable(mps)
    x0 = initial_guess(mps) if init is None else init
    x, cost, iters, converged = _lm_minimize(mps, x0, None, max_iters, tol)
    return SolveResult(x, np.ones(len(mps)), cost, iters, converged)


def dnlo_alpha_step(sq_residuals: np.ndarray, c: float, d: float) -> np.ndarray:
    """Exact minimizer of sum alpha e + (1 - alpha) c over the polytope
    0 <= alpha <= 1, sum alpha >= d, for fixed residuals e.

    The objective is linear in alpha, so: alpha = 1 wherever e <= c; if the
    weight mass is still short of d, the remaining pairs are raised in order
    of increasing e, the last one fractionally so the sum lands exactly on d.
    """
    e = np.asarray(sq_residuals, dtype=float)
    if d > e.shape[0]:
        raise InfeasibleWeightSumError(f"d={d} exceeds {e.shape[0]} pairs")
    alpha = np.where(e <= c, 1.0, 0.0)
    mass = float(alpha.sum())
    if mass < d:
        for idx in np.argsort(np.where(alpha < 1.0, e, np.inf), kind="stable"):
            if alpha[idx] == 1.0:
                break
            add = min(1.0, d - mass)
            alpha[idx] = add
            mass += add
            if mass >= d:
                break
    return alpha


def _dnlo_objective(alpha: np.ndarray, e: np.ndarray, c: float) -> float:
    slack = float((1.0 - alpha).sum())
    penalty = c * slack if slack > 0.0 else 0.0  # keeps c = inf finite
    return float(alpha @ e) + penalty


def solve_dnlo(
    mps: MotionPairSet,
    params: DnloParams = DnloParams(),
    init: Extrinsic | None = None,
) -> SolveResult:
    """Alternating minimization of the weighted objective: a weighted dnl fit
    for fixed weights, then the exact weight update for the fixed extrinsic,
    until the weights stop changing and the objective settles."""
    _require_observable(mps)
    k = len(mps)
    d = params.resolve_d(k)
    x = initial_guess(mps) if init is None else init
    alpha = np.ones(k)
    prev_obj = np.inf
    total_iters = 0
    converged = False
    for _ in range(params.max_outer_iters):
        x, _, iters, _ = _lm_minimize(mps, x, alpha, LM_MAX_ITERS, 1e-14)
        total_iters += iters
        e = per_pair_squared_residuals(x, mps)
        new_alpha = dnlo_alpha_step(e, params.c, d)
        obj = _dnlo_objective(new_alpha, e, params.c)
        unchanged = bool(np.array_equal(new_alpha, alpha))
        alpha = new_alpha
        if unchanged and abs(prev_obj - obj) <= params.convergence_tol * max(1.0, abs(obj)):
            prev_obj = obj
            converged = True
            break
        prev_obj = obj
    return SolveResult(x, alpha, prev_obj, total_iters, converged)


SOLVERS = ("separable", "dnl", "dnlo")


def solve(
    name: str,
    mps: MotionPairSet,
    dnlo_params: DnloParams = DnloParams(),
    init: Extrinsic | None = None,
) -> SolveResult:
    """Dispatch by solver name: 'separable', 'dnl' or 'dnlo'."""
    if name == "separable":
        return solve_separable(mps)
    if name == "dnl":
        return solve_dnl(mps, init=init)
    if name == "dnlo":
        return solve_dnlo(mps, params=dnlo_params, init=init)
    raise ValueError(f"unknown solver {name!r} (expected one of {SOLVERS})")
