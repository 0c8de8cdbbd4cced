"""Planar n-link arm: kinematics, reaching costs, obstacle avoidance.

The arm is a chain of revolute joints in the plane.  Costs penalize
end-effector distance to a target (weight 50), binary per-link collisions
with circular obstacles, and, for trajectories, a path-length ratio that
equals 1 for any monotone straight-line motion in joint space.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..tt import Grid
from ..ttgo import MonotoneTransform
from .base import Problem
from .basis import radial_matrix

GOAL_WEIGHT = 50.0
CONTROL_WEIGHT = 0.1
CONTROL_EPS = 1e-6


@dataclass
class PlanarArm:
    link_lengths: list[float]
    base: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        self.link_lengths = [float(l) for l in self.link_lengths]
        if any(l <= 0 for l in self.link_lengths):
            raise ValueError("link lengths must be positive")

    @property
    def n_joints(self) -> int:
        return len(self.link_lengths)

    @property
    def reach(self) -> float:
        return sum(self.link_lengths)


def joint_points(arm: PlanarArm, q: np.ndarray) -> np.ndarray:
    """Articulation points for a batch of configurations.

    q has shape (..., n); the result has shape (..., n+1, 2) with the base
    first and the end-effector last.
    """
    q = np.asarray(q, dtype=float)
    angles = np.cumsum(q, axis=-1)
    lengths = np.asarray(arm.link_lengths)
    dx = lengths * np.cos(angles)
    dy = lengths * np.sin(angles)
    steps = np.stack([dx, dy], axis=-1)  # (..., n, 2)
    pts = np.concatenate(
        [np.zeros(steps.shape[:-2] + (1, 2)), np.cumsum(steps, axis=-2)], axis=-2
    )
    return pts + np.asarray(arm.base)


def fk_planar(arm: PlanarArm, q) -> tuple[list[tuple[np.ndarray, np.ndarray]], np.ndarray]:
    """Link segments and end-effector position of one configuration."""
    pts = joint_points(arm, np.asarray(q, dtype=float))
    segments = [(pts[i], pts[i + 1]) for i in range(arm.n_joints)]
    return segments, pts[-1]


def segment_circle_hits(pts: np.ndarray, obstacles: np.ndarray) -> np.ndarray:
    """Binary per-link collision flags against circles; touching counts.

    pts: (..., n+1, 2) articulation points; obstacles: (m, 3) rows of
    (cx, cy, r).  Returns (..., n) flags, 1.0 where a link hits any circle.
    """
    p0 = pts[..., :-1, :]  # (..., n, 2)
    seg = pts[..., 1:, :] - p0
    seg_len2 = np.maximum(np.sum(seg * seg, axis=-1), 1e-300)
    flags = np.zeros(p0.shape[:-1])
    for cx, cy, r in obstacles:
        rel = np.asarray([cx, cy]) - p0
        t = np.clip(np.sum(rel * seg, axis=-1) / seg_len2, 0.0, 1.0)
        closest = p0 + t[..., None] * seg
        d2 = np.sum((closest - np.asarray([cx, cy])) ** 2, axis=-1)
        flags = np.maximum(flags, (d2 <= r * r).astype(float))
    return flags


def ik_cost(arm: PlanarArm, q, target, obstacles=()) -> float:
    """Reaching cost of a single configuration."""
    q = np.asarray(q, dtype=float)
    pts = joint_points(arm, q)
    dist = float(np.linalg.norm(pts[-1] - np.asarray(target, dtype=float)))
    obs = np.asarray(obstacles, dtype=float).reshape(-1, 3)
    coll = float(np.sum(segment_circle_hits(pts, obs))) if len(obs) else 0.0
    return GOAL_WEIGHT * dist + coll


def _decode_trajectories(psi0: np.ndarray, q0: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Joint trajectories from weight rows.

    psi0 is the basis matrix with its first row subtracted, so the decoded
    offset vanishes at t=0 and every trajectory starts exactly at q0.
    W: (m, n_joints * B) with joint-major blocks.  Returns (m, T, n).
    """
    m = W.shape[0]
    n = len(q0)
    b = psi0.shape[1]
    blocks = W.reshape(m, n, b)  # (m, joint, basis)
    offsets = np.einsum("tb,mnb->mtn", psi0, blocks)
    return q0[None, None, :] + offsets


def mp_cost_batch(
    arm: PlanarArm,
    q0: np.ndarray,
    W: np.ndarray,
    target: np.ndarray,
    obstacles: np.ndarray,
    psi: np.ndarray,
    chunk: int = 4096,
) -> np.ndarray:
    """Trajectory costs for weight rows W (m, n*B)."""
    psi0 = psi - psi[0]
    q0 = np.asarray(q0, dtype=float)
    target = np.asarray(target, dtype=float)
    obstacles = np.asarray(obstacles, dtype=float).reshape(-1, 3)
    out = np.empty(len(W))
    for s in range(0, len(W), chunk):
        rows = np.asarray(W[s : s + chunk], dtype=float)
        traj = _decode_trajectories(psi0, q0, rows)  # (m, T, n)
        pts = joint_points(arm, traj)  # (m, T, n+1, 2)
        eef = pts[:, -1, -1, :]
        c_goal = np.linalg.norm(eef - target, axis=-1)
        if len(obstacles):
            hits = segment_circle_hits(pts[:, 1:], obstacles)  # skip fixed start
            c_obst = np.sum(np.max(hits, axis=-1), axis=-1)
        else:
            c_obst = 0.0
        steps = np.linalg.norm(np.diff(traj, axis=1), axis=-1).sum(axis=1)
        direct = np.linalg.norm(traj[:, -1] - traj[:, 0], axis=-1)
        c_control = steps / (direct + CONTROL_EPS)
        out[s : s + len(rows)] = GOAL_WEIGHT * c_goal + c_obst + CONTROL_WEIGHT * c_control
    return out


def mp_cost(arm: PlanarArm, q0, weights, target, obstacles, psi: np.ndarray) -> float:
    """Single-trajectory motion planning cost."""
    W = np.asarray(weights, dtype=float).reshape(1, -1)
    return float(mp_cost_batch(arm, np.asarray(q0, float), W, target, obstacles, psi))


def build_ik_planar(
    link_lengths=(1.0, 1.0, 1.0),
    n_joint: int = 20,
    joint_limit: float = np.pi,
    obstacles=((1.0, 0.8, 0.3),),
    target_lo: float = -2.5,
    target_hi: float = 2.5,
    n_target: int = 20,
    beta: float = 0.1,
) -> Problem:
    """Reaching problem conditioned on the 2-D target position."""
    arm = PlanarArm(list(link_lengths))
    obs = np.asarray(obstacles, dtype=float).reshape(-1, 3)

    def batch(Z, A, W):
        pts = joint_points(arm, W)
        dist = np.linalg.norm(pts[:, -1, :] - Z, axis=-1)
        coll = segment_circle_hits(pts, obs).sum(axis=-1) if len(obs) else 0.0
        return GOAL_WEIGHT * dist + coll

    def error(Z, A, W):
        pts = joint_points(arm, W)
        return np.linalg.norm(pts[:, -1, :] - Z, axis=-1)

    return Problem(
        name="ik_planar",
        condition_grids=[Grid(target_lo, target_hi, n_target)] * 2,
        action_sets=[],
        weight_grids=[Grid(-joint_limit, joint_limit, n_joint)] * arm.n_joints,
        cost_batch=batch,
        error_batch=error,
        transform=MonotoneTransform("negexp", beta),
        meta={"r_max": 21, "arm": arm.link_lengths, "obstacles": obs.tolist()},
    )


def build_mp_planar(
    link_lengths=(1.0, 1.0, 1.0),
    q0=(np.pi, 0.0, 0.0),
    target=(-1.55, 0.0),
    obstacles=((-2.2, 0.95, 0.35), (-2.2, -0.95, 0.35)),
    horizon: int = 50,
    bases_per_joint: int = 4,
    weight_limit: float = 2.6,
    n_weight: int = 20,
    beta: float = 0.1,
) -> Problem:
    """Trajectory planning around circular obstacles, no conditioning.

    The default scene is bimodal: the extended arm must retreat its
    end-effector to a nearer target along the axis between two circles,
    folding the elbow either above or below the passage.
    """
    arm = PlanarArm(list(link_lengths))
    q0 = np.asarray(q0, dtype=float)
    target_arr = np.asarray(target, dtype=float)
    obs = np.asarray(obstacles, dtype=float).reshape(-1, 3)
    psi = radial_matrix(horizon, bases_per_joint)
    psi0 = psi - psi[0]
    n_w = arm.n_joints * bases_per_joint

    def batch(Z, A, W):
        return mp_cost_batch(arm, q0, W, target_arr, obs, psi)

    def error(Z, A, W):
        out = np.empty(len(W))
        for s in range(0, len(W), 4096):
            rows = np.asarray(W[s : s + 4096], dtype=float)
            traj = _decode_trajectories(psi0, q0, rows)
            pts = joint_points(arm, traj[:, -1])
            out[s : s + len(rows)] = np.linalg.norm(pts[:, -1, :] - target_arr, axis=-1)
        return out

    return Problem(
        name="mp_planar",
        condition_grids=[],
        action_sets=[],
        weight_grids=[Grid(-weight_limit, weight_limit, n_weight)] * n_w,
        cost_batch=batch,
        error_batch=error,
        transform=MonotoneTransform("negexp", beta),
        horizon=horizon,
        meta={
            "r_max": 16,
            "arm": arm.link_lengths,
            "q0": q0.tolist(),
            "target": target_arr.tolist(),
            "obstacles": obs.tolist(),
            "bases_per_joint": bases_per_joint,
        },
    )
