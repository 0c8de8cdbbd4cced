"""Quasi-static planar pushing with per-stage contact-face switching.

The slider is a square of half side ``half_size``; the pusher sticks to the
midpoint of the selected face and applies a body-frame velocity.  An
ellipsoidal limit-surface approximation maps the contact velocity to a body
twist: the object translates with the pusher and rotates with
``omega = (p_x v_y - p_y v_x) / (c^2 + |p|^2)`` for contact point p and
model parameter c.  Poses integrate by explicit Euler; the face is fixed
within a stage and may change only at stage boundaries.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..tt import Grid
from ..ttgo import MonotoneTransform
from .base import Problem
from .basis import radial_matrix

FACES = (1, 2, 3, 4)
ANGLE_WEIGHT = 0.1
EFFORT_WEIGHT = 0.01


def wrap_angle(theta):
    """Wrap to (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(theta, dtype=float), 2.0 * np.pi)


@dataclass
class PushState:
    x: float
    y: float
    theta: float
    face: int = 1

    def __post_init__(self):
        if self.face not in FACES:
            raise ValueError(f"invalid face {self.face}; must be one of {FACES}")
        self.theta = float(wrap_angle(self.theta))

    def pose(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta])


def contact_point(face: int, half_size: float) -> np.ndarray:
    """Body-frame midpoint of a face: 1/2 on the -x/+x faces, 3/4 on -y/+y."""
    if face == 1:
        return np.array([-half_size, 0.0])
    if face == 2:
        return np.array([half_size, 0.0])
    if face == 3:
        return np.array([0.0, -half_size])
    if face == 4:
        return np.array([0.0, half_size])
    raise ValueError(f"invalid face {face}; must be one of {FACES}")


def push_step(
    s: PushState,
    face: int,
    u,
    dt: float,
    half_size: float = 0.05,
    c_ellipsoid: float = 0.04,
) -> PushState:
    """One Euler step of the pusher-slider model with sticking contact."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    p = contact_point(face, half_size)
    ux, uy = float(u[0]), float(u[1])
    omega = (p[0] * uy - p[1] * ux) / (c_ellipsoid**2 + p[0] ** 2 + p[1] ** 2)
    cos_t, sin_t = np.cos(s.theta), np.sin(s.theta)
    return PushState(
        x=s.x + dt * (cos_t * ux - sin_t * uy),
        y=s.y + dt * (sin_t * ux + cos_t * uy),
        theta=float(wrap_angle(s.theta + dt * omega)),
        face=face,
    )


def push_cost(trajectory, actions, target_pose) -> float:
    """State-reaching plus control-effort cost of a rolled-out push.

    ``trajectory`` is the sequence of (x, y, theta) poses (or PushStates),
    ``actions`` the flat list of per-step velocity 2-vectors.
    """
    if len(trajectory) == 0:
        raise ValueError("empty trajectory")
    last = trajectory[-1]
    pose = last.pose() if isinstance(last, PushState) else np.asarray(last, dtype=float)
    target_pose = np.asarray(target_pose, dtype=float)
    pos_err = float(np.linalg.norm(pose[:2] - target_pose[:2]))
    ang_err = abs(float(wrap_angle(pose[2] - target_pose[2])))
    effort = float(sum(np.linalg.norm(np.asarray(u, dtype=float)) for u in actions))
    return pos_err + ANGLE_WEIGHT * ang_err + EFFORT_WEIGHT * effort


def rollout_batch(
    start: np.ndarray,
    faces: np.ndarray,
    velocities: np.ndarray,
    dt: float,
    half_size: float,
    c_ellipsoid: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized rollout of m pushes.

    faces: (m, K) face labels; velocities: (m, K, T, 2) body-frame pusher
    velocities.  Returns final poses (m, 3) and per-candidate total effort.
    """
    m, k_stages, steps, _ = velocities.shape
    x = np.full(m, float(start[0]))
    y = np.full(m, float(start[1]))
    th = np.full(m, float(start[2]))
    contacts = np.array([contact_point(f, half_size) for f in FACES])
    denom_base = c_ellipsoid**2 + half_size**2
    effort = np.zeros(m)
    for k in range(k_stages):
        p = contacts[np.asarray(faces[:, k], dtype=int) - 1]  # (m, 2)
        for t in range(steps):
            u = velocities[:, k, t, :]
            omega = (p[:, 0] * u[:, 1] - p[:, 1] * u[:, 0]) / denom_base
            cos_t, sin_t = np.cos(th), np.sin(th)
            x = x + dt * (cos_t * u[:, 0] - sin_t * u[:, 1])
            y = y + dt * (sin_t * u[:, 0] + cos_t * u[:, 1])
            th = wrap_angle(th + dt * omega)
        effort += np.linalg.norm(velocities[:, k], axis=-1).sum(axis=-1)
    return np.stack([x, y, th], axis=1), effort


def face_switches(faces) -> int:
    f = np.asarray(faces, dtype=int)
    return int(np.sum(f[1:] != f[:-1]))


def build_push_planar(
    stages: int = 3,
    steps_per_stage: int = 20,
    dt: float = 0.05,
    half_size: float = 0.05,
    c_ellipsoid: float = 0.04,
    u_max: float = 0.12,
    bases_per_component: int = 1,
    n_weight: int = 50,
    start=(0.25, 0.25, -np.pi / 2),
    goal=(0.25, 0.25, np.pi / 2),
    beta: float = 3.0,
) -> Problem:
    """Multi-stage pushing: pick a contact face per stage plus the weights
    of each stage's body-frame velocity trajectory."""
    start = np.asarray(start, dtype=float)
    goal = np.asarray(goal, dtype=float)
    psi = radial_matrix(steps_per_stage, bases_per_component)
    n_w = stages * 2 * bases_per_component

    def decode_velocities(W: np.ndarray) -> np.ndarray:
        # weight layout: stage-major, (vx block, vy block) per stage
        m = W.shape[0]
        blocks = W.reshape(m, stages, 2, bases_per_component)
        return np.einsum("tb,mkcb->mktc", psi, blocks)  # (m, K, T, 2)

    def batch(Z, A, W):
        vel = decode_velocities(np.asarray(W, dtype=float))
        poses, effort = rollout_batch(start, A, vel, dt, half_size, c_ellipsoid)
        pos_err = np.linalg.norm(poses[:, :2] - goal[:2], axis=1)
        ang_err = np.abs(wrap_angle(poses[:, 2] - goal[2]))
        return pos_err + ANGLE_WEIGHT * ang_err + EFFORT_WEIGHT * effort

    def error(Z, A, W):
        vel = decode_velocities(np.asarray(W, dtype=float))
        poses, _ = rollout_batch(start, A, vel, dt, half_size, c_ellipsoid)
        pos_err = np.linalg.norm(poses[:, :2] - goal[:2], axis=1)
        ang_err = np.abs(wrap_angle(poses[:, 2] - goal[2]))
        return pos_err + ANGLE_WEIGHT * ang_err

    return Problem(
        name="push_planar",
        condition_grids=[],
        action_sets=[np.array(FACES)] * stages,
        weight_grids=[Grid(-u_max, u_max, n_weight)] * n_w,
        cost_batch=batch,
        error_batch=error,
        transform=MonotoneTransform("negexp", beta),
        transition=lambda mode, action: [action],
        stages=stages,
        horizon=steps_per_stage,
        meta={
            "r_max": 8,
            "start": start.tolist(),
            "goal": goal.tolist(),
            "dt": dt,
            "half_size": half_size,
            "c_ellipsoid": c_ellipsoid,
            "u_max": u_max,
            "bases_per_component": bases_per_component,
        },
    )
