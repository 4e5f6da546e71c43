"""Rigid alignment of corresponded point sets and flow label generation.

Bridges between per-point 3D flow and rigid poses: ``flow_to_se3`` solves
the least-squares rigid transform between corresponded sets (SVD with a
reflection guard), and ``gen_flow_labels`` produces per-waypoint flow targets
from a relative pose trajectory.  Composing the two closes exactly on
noiseless data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geom import Pose, apply_relative, compose, matrix_to_rotvec

__all__ = [
    "FlowPair",
    "DegenerateGeometry",
    "LengthMismatch",
    "flow_to_se3",
    "gen_flow_labels",
    "recover_relative",
]

# Collinearity threshold on the second singular value of the centered source
# set, relative to the largest.
_COLLINEAR_RTOL = 1e-9


class DegenerateGeometry(ValueError):
    """Source points are (near-)collinear; rotation is not unique."""


class LengthMismatch(ValueError):
    """Corresponded point sets differ in length."""


@dataclass(frozen=True, eq=False)
class FlowPair:
    """Corresponded point sets p0 -> p1, both (N, 3) with N >= 3."""

    p0: np.ndarray
    p1: np.ndarray

    def __post_init__(self):
        p0 = np.ascontiguousarray(np.asarray(self.p0, dtype=float).reshape(-1, 3))
        p1 = np.ascontiguousarray(np.asarray(self.p1, dtype=float).reshape(-1, 3))
        if p0.shape[0] != p1.shape[0]:
            raise LengthMismatch(f"{p0.shape[0]} vs {p1.shape[0]} points")
        if p0.shape[0] < 3:
            raise ValueError("need at least 3 corresponded points")
        p0.flags.writeable = False
        p1.flags.writeable = False
        object.__setattr__(self, "p0", p0)
        object.__setattr__(self, "p1", p1)


def flow_to_se3(pair: FlowPair) -> Pose:
    """Least-squares rigid transform minimizing sum ||T(p0_i) - p1_i||^2.

    Kabsch/Umeyama with a determinant correction on the smallest singular
    vector so the result is always a proper rotation.

    Raises:
        DegenerateGeometry: when the source points are collinear.
    """
    c0 = pair.p0.mean(axis=0)
    c1 = pair.p1.mean(axis=0)
    q0 = pair.p0 - c0
    q1 = pair.p1 - c1

    s = np.linalg.svd(q0, compute_uv=False)
    if s[0] <= 0.0 or s[1] <= _COLLINEAR_RTOL * s[0]:
        raise DegenerateGeometry("source points are collinear; rotation underdetermined")

    h = q0.T @ q1
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    r = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    t = c1 - r @ c0
    return Pose(matrix_to_rotvec(r), t)


def gen_flow_labels(points: np.ndarray, rel_traj, u) -> list:
    """Per-waypoint flow targets: object points moved by each relative pose.

    ``rel_traj`` is a sequence of relative object-frame poses about ``u``
    (a PoseTrajectory's poses or a plain list).  Returns one (N, 3) array per
    waypoint, in the source frame.
    """
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    poses = rel_traj.poses if hasattr(rel_traj, "poses") else list(rel_traj)
    return [apply_relative(d, u).apply(points) for d in poses]


def recover_relative(points: np.ndarray, flow: np.ndarray, u) -> Pose:
    """Recover the u-centered relative pose that maps ``points`` to ``flow``."""
    u = np.asarray(u, dtype=float).reshape(3)
    world = flow_to_se3(FlowPair(points, flow))
    tu = Pose(np.zeros(3), u)
    tu_inv = Pose(np.zeros(3), -u)
    return compose(tu_inv, compose(world, tu))
