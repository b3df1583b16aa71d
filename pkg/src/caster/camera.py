"""Pinhole projection and pose recovery from 2D-3D correspondences.

The pose solver minimizes squared reprojection error over an axis-angle
rotation and a translation with Levenberg-Marquardt, so the rotation stays
on SO(3) by construction. It is seeded with a direct linear (DLT-style)
estimate when no initial pose is supplied.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BehindCamera, NonConvergence

MIN_DEPTH = 1e-6

# Levenberg-Marquardt schedule
LM_MAX_ITERS = 100
LM_STEP_TOL = 1e-10
LM_COST_TOL = 1e-12
LM_DAMPING_INIT = 1e-3
LM_DAMPING_MAX = 1e12


@dataclass(frozen=True)
class CameraIntrinsics:
    """Single focal length (pixels) and principal point (pixels)."""

    focal: float
    cx: float
    cy: float

    def __post_init__(self):
        if not self.focal > 0.0:
            raise ValueError("focal must be positive")

    def matrix(self) -> np.ndarray:
        return np.array([[self.focal, 0.0, self.cx],
                         [0.0, self.focal, self.cy],
                         [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class Pose:
    """Rigid transform from the hand-world frame to the camera frame."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float)
        if r.shape != (3, 3):
            raise ValueError("rotation must be 3x3")
        if np.max(np.abs(r @ r.T - np.eye(3))) > 1e-9:
            raise ValueError("rotation is not orthonormal")
        if abs(np.linalg.det(r) - 1.0) > 1e-9:
            raise ValueError("rotation determinant is not +1")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation",
                           np.asarray(self.translation, dtype=float).reshape(3))

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.eye(3), np.zeros(3))


def to_camera(point, pose: Pose) -> np.ndarray:
    """Map a hand-world point into the camera frame: R p + t."""
    return pose.rotation @ np.asarray(point, dtype=float) + pose.translation


def project(point, pose: Pose, intrinsics: CameraIntrinsics) -> np.ndarray:
    """Pinhole projection of one world point to pixel coordinates."""
    pc = to_camera(point, pose)
    if pc[2] <= MIN_DEPTH:
        raise BehindCamera(f"depth {pc[2]:.3e} m is not in front of the camera")
    return np.array([intrinsics.focal * pc[0] / pc[2] + intrinsics.cx,
                     intrinsics.focal * pc[1] / pc[2] + intrinsics.cy])


def project_points(points, pose: Pose, intrinsics: CameraIntrinsics) -> np.ndarray:
    """Vectorized projection of (N, 3) world points; raises on any bad depth."""
    pc = np.asarray(points, dtype=float) @ pose.rotation.T + pose.translation
    if np.any(pc[:, 2] <= MIN_DEPTH):
        raise BehindCamera("one or more points behind the camera")
    out = pc[:, :2] * (intrinsics.focal / pc[:, 2])[:, None]
    out[:, 0] += intrinsics.cx
    out[:, 1] += intrinsics.cy
    return out


# ---------------------------------------------------------------------------
# axis-angle <-> rotation matrix
# ---------------------------------------------------------------------------

def _skew(v):
    return np.array([[0.0, -v[2], v[1]],
                     [v[2], 0.0, -v[0]],
                     [-v[1], v[0], 0.0]])


def rotation_from_axis_angle(w) -> np.ndarray:
    """Rodrigues formula; series expansion near zero angle."""
    w = np.asarray(w, dtype=float)
    phi2 = float(w @ w)
    phi = np.sqrt(phi2)
    k = _skew(w)
    if phi < 1e-8:
        a = 1.0 - phi2 / 6.0
        b = 0.5 - phi2 / 24.0
    else:
        a = np.sin(phi) / phi
        b = (1.0 - np.cos(phi)) / phi2
    return np.eye(3) + a * k + b * (k @ k)


def axis_angle_from_rotation(r) -> np.ndarray:
    """Logarithm map of a rotation matrix, stable near 0 and pi."""
    r = np.asarray(r, dtype=float)
    cos_phi = np.clip((np.trace(r) - 1.0) / 2.0, -1.0, 1.0)
    phi = np.arccos(cos_phi)
    if phi < 1e-8:
        return 0.5 * np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    if np.pi - phi < 1e-6:
        # axis from the dominant column of R + I
        m = r + np.eye(3)
        col = np.argmax(np.sum(m * m, axis=0))
        axis = m[:, col] / np.linalg.norm(m[:, col])
        vee = np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
        if vee @ axis < 0.0:
            axis = -axis
        return phi * axis
    vee = np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    return phi / (2.0 * np.sin(phi)) * vee


def _right_jacobian(w) -> np.ndarray:
    """Right Jacobian of SO(3): R(w + dw) ~ R(w) (I + [Jr dw]x)."""
    w = np.asarray(w, dtype=float)
    phi2 = float(w @ w)
    phi = np.sqrt(phi2)
    k = _skew(w)
    if phi < 1e-8:
        b = 0.5 - phi2 / 24.0
        c = 1.0 / 6.0 - phi2 / 120.0
    else:
        b = (1.0 - np.cos(phi)) / phi2
        c = (phi - np.sin(phi)) / (phi2 * phi)
    return np.eye(3) - b * k + c * (k @ k)


# ---------------------------------------------------------------------------
# PnP
# ---------------------------------------------------------------------------

def _reprojection(params, world, intrinsics):
    """Residual vector (2N,) and per-point camera coordinates, or None if a
    point falls behind the camera for this parameter vector."""
    r = rotation_from_axis_angle(params[:3])
    pc = world @ r.T + params[3:]
    if np.any(pc[:, 2] <= MIN_DEPTH):
        return None, None, None
    inv_z = 1.0 / pc[:, 2]
    proj = pc[:, :2] * (intrinsics.focal * inv_z)[:, None]
    proj[:, 0] += intrinsics.cx
    proj[:, 1] += intrinsics.cy
    return proj, pc, r


def _jacobian(world, pc, r, w, focal):
    """Analytic Jacobian of the stacked pixel residuals w.r.t. (w, t)."""
    n = world.shape[0]
    jr = _right_jacobian(w)
    jac = np.empty((2 * n, 6))
    for i in range(n):
        x, y, z = pc[i]
        d_pc_dw = -r @ _skew(world[i]) @ jr
        du_dpc = np.array([focal / z, 0.0, -focal * x / (z * z)])
        dv_dpc = np.array([0.0, focal / z, -focal * y / (z * z)])
        jac[2 * i, :3] = du_dpc @ d_pc_dw
        jac[2 * i, 3:] = du_dpc
        jac[2 * i + 1, :3] = dv_dpc @ d_pc_dw
        jac[2 * i + 1, 3:] = dv_dpc
    return jac


def _dlt_estimate(pixels, world, intrinsics):
    """Direct linear pose estimate; None when the system is too degenerate."""
    n = world.shape[0]
    xn = (pixels[:, 0] - intrinsics.cx) / intrinsics.focal
    yn = (pixels[:, 1] - intrinsics.cy) / intrinsics.focal
    a = np.zeros((2 * n, 12))
    ones = np.ones(n)
    a[0::2, 0:3] = world
    a[0::2, 3] = ones
    a[0::2, 8:11] = -world * xn[:, None]
    a[0::2, 11] = -xn
    a[1::2, 4:7] = world
    a[1::2, 7] = ones
    a[1::2, 8:11] = -world * yn[:, None]
    a[1::2, 11] = -yn
    try:
        _, sv, vt = np.linalg.svd(a)
    except np.linalg.LinAlgError:
        return None
    if sv[-2] < 1e-10 * sv[0]:
        return None  # rank-deficient (planar or collinear points)
    # the null vector is defined up to sign; keep the one that leaves a
    # proper rotation with the points in front of the camera
    for sign in (1.0, -1.0):
        p = (sign * vt[-1]).reshape(3, 4)
        m = p[:, :3]
        if np.linalg.det(m) <= 0.0:
            continue
        u, s, vh = np.linalg.svd(m)
        if np.min(s) < 1e-12 * np.max(s):
            continue
        rot = u @ vh
        t = p[:, 3] / np.mean(s)
        if not np.all(np.isfinite(rot)) or not np.all(np.isfinite(t)):
            continue
        if np.mean(world @ rot[2] + t[2]) <= 0.0:
            continue
        return np.concatenate([axis_angle_from_rotation(rot), t])
    return None


def solve_pnp(pixels, world, intrinsics: CameraIntrinsics,
              initial: Pose | None = None):
    """Recover the camera pose from N pixel/world correspondences.

    Returns (Pose, residual_rms) where residual_rms is the RMS pixel
    residual over the points. Deterministic for identical inputs and
    initial guess. Raises NonConvergence when the optimizer exhausts its
    iteration budget without meeting the step or cost criteria.
    """
    pixels = np.asarray(pixels, dtype=float).reshape(-1, 2)
    world = np.asarray(world, dtype=float).reshape(-1, 3)
    n = world.shape[0]
    if n < 4 or pixels.shape[0] != n:
        raise ValueError("need at least 4 matched pixel/world points")

    if initial is not None:
        params = np.concatenate([axis_angle_from_rotation(initial.rotation),
                                 initial.translation])
        if _reprojection(params, world, intrinsics)[0] is None:
            params = None
    else:
        params = None
    if params is None:
        params = _dlt_estimate(pixels, world, intrinsics)
    if params is None or _reprojection(params, world, intrinsics)[0] is None:
        # crude but always-valid seed: identity rotation one meter out
        params = np.array([0.0, 0.0, 0.0, 0.0, 0.0, 1.0])

    proj, pc, rot = _reprojection(params, world, intrinsics)
    if proj is None:
        raise NonConvergence("no valid starting pose keeps the points in view")
    resid = (proj - pixels).ravel()
    cost = float(resid @ resid)

    damping = LM_DAMPING_INIT
    converged = False
    for _ in range(LM_MAX_ITERS):
        jac = _jacobian(world, pc, rot, params[:3], intrinsics.focal)
        jtj = jac.T @ jac
        g = jac.T @ resid
        accepted = False
        while damping <= LM_DAMPING_MAX:
            try:
                step = np.linalg.solve(jtj + damping * np.eye(6), -g)
            except np.linalg.LinAlgError:
                damping *= 10.0
                continue
            cand = params + step
            proj_c, pc_c, rot_c = _reprojection(cand, world, intrinsics)
            if proj_c is None:
                damping *= 10.0
                continue
            resid_c = (proj_c - pixels).ravel()
            cost_c = float(resid_c @ resid_c)
            if cost_c < cost:
                rel_drop = (cost - cost_c) / max(cost, 1e-300)
                params, proj, pc, rot = cand, proj_c, pc_c, rot_c
                resid, cost = resid_c, cost_c
                damping = max(damping / 10.0, 1e-15)
                accepted = True
                if float(np.linalg.norm(step)) < LM_STEP_TOL or rel_drop < LM_COST_TOL:
                    converged = True
                break
            if float(np.linalg.norm(step)) < LM_STEP_TOL:
                converged = True  # no improving direction left at tiny scale
                break
            damping *= 10.0
        if converged or (not accepted and damping > LM_DAMPING_MAX):
            converged = converged or not accepted
            break
    if not converged:
        raise NonConvergence(
            f"pose refinement still moving after {LM_MAX_ITERS} iterations "
            f"(rms {np.sqrt(cost / n):.3g} px)")

    pose = Pose(rotation_from_axis_angle(params[:3]), params[3:])
    return pose, float(np.sqrt(cost / n))
