"""Quantitative success criteria for the four desk tasks.

Each evaluator consumes a realized object trajectory (poses mapping initial
world points to time-t world points, entry 0 = identity) plus the object
center u, and applies the task's thresholds with the exact strictness of
their definitions: "within" is inclusive, "more than" is strict.

Conventions:
  - object center path: c_t = pose_t applied to u
  - object up direction: rotation part of pose_t applied to upright_axis
  - pick-and-place: final height within 0.15 m of the table, final center
    within 0.08 m of the goal, up axis within 45 degrees of its start
  - pour: up axis tilted more than 60 degrees, the horizontal displacement
    of the tilt direction has positive dot product with the start-to-goal
    direction, final center within 0.08 m of the goal
  - stir / draw: polyline length of the center path restricted to a
    cylindrical region (both segment endpoints inside, boundary inclusive)
    exceeds 0.10 m / 0.20 m
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .geom import PoseTrajectory

__all__ = [
    "TaskKind",
    "TaskSpec",
    "TaskThresholds",
    "MissingField",
    "evaluate",
    "cylinder_path_length",
]


class TaskKind(Enum):
    PICK_PLACE = "PickPlace"
    POUR = "Pour"
    STIR = "Stir"
    DRAW = "Draw"


class MissingField(ValueError):
    """A field required by the task kind is absent."""


@dataclass(frozen=True)
class TaskThresholds:
    pp_table: float = 0.15
    pp_pos: float = 0.08
    pp_upright_deg: float = 45.0
    pour_tilt_deg: float = 60.0
    pour_pos: float = 0.08
    stir_h: float = 0.08
    stir_r: float = 0.15
    stir_path: float = 0.10
    draw_h: float = 0.05
    draw_r: float = 0.12
    draw_path: float = 0.20

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if not value > 0.0:
                raise ValueError(f"threshold {name} must be positive")


def _opt_vec(v, n):
    if v is None:
        return None
    a = np.asarray(v, dtype=float).reshape(n)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class TaskSpec:
    kind: TaskKind
    goal3d: object = None
    region_center: object = None
    table_height: float | None = None
    upright_axis: object = None
    thresholds: TaskThresholds = field(default_factory=TaskThresholds)

    def __post_init__(self):
        object.__setattr__(self, "kind", TaskKind(self.kind))
        object.__setattr__(self, "goal3d", _opt_vec(self.goal3d, 3))
        object.__setattr__(self, "region_center", _opt_vec(self.region_center, 3))
        object.__setattr__(self, "upright_axis", _opt_vec(self.upright_axis, 3))

    def _require(self, *names):
        for name in names:
            if getattr(self, name) is None:
                raise MissingField(f"{self.kind.value} requires {name}")

    def to_dict(self) -> dict:
        doc = {"kind": self.kind.value}
        for name in ("goal3d", "region_center", "upright_axis"):
            v = getattr(self, name)
            if v is not None:
                doc[name] = [float(x) for x in v]
        if self.table_height is not None:
            doc["table_height"] = float(self.table_height)
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "TaskSpec":
        return cls(
            kind=TaskKind(doc["kind"]),
            goal3d=doc.get("goal3d"),
            region_center=doc.get("region_center"),
            table_height=doc.get("table_height"),
            upright_axis=doc.get("upright_axis"),
        )


def _angle_between(a, b) -> float:
    an = np.linalg.norm(a)
    bn = np.linalg.norm(b)
    c = float(np.dot(a, b) / (an * bn))
    return math.acos(max(-1.0, min(1.0, c)))


def cylinder_path_length(centers: np.ndarray, region_center, radius: float, height: float) -> float:
    """Polyline length counting segments with both endpoints in the cylinder.

    The cylinder is vertical, centered on region_center, with the given
    radius and total height; boundary membership is inclusive.
    """
    c = np.asarray(region_center, dtype=float).reshape(3)
    d = centers - c
    horiz = np.hypot(d[:, 0], d[:, 1])
    inside = (horiz <= radius) & (np.abs(d[:, 2]) <= 0.5 * height)
    seg = np.linalg.norm(np.diff(centers, axis=0), axis=1)
    both = inside[:-1] & inside[1:]
    return float(np.sum(seg[both]))


def evaluate(task: TaskSpec, traj: PoseTrajectory, u) -> bool:
    """Apply the task's success criterion to a realized object trajectory.

    Raises:
        MissingField: the task kind needs a field the spec does not provide.
    """
    if len(traj.entries) == 0:
        raise ValueError("trajectory must be nonempty")
    u = np.asarray(u, dtype=float).reshape(3)
    poses = traj.poses
    centers = np.array([p.apply(u) for p in poses])
    th = task.thresholds

    if task.kind is TaskKind.PICK_PLACE:
        task._require("goal3d", "table_height", "upright_axis")
        up0 = poses[0].rot_matrix() @ task.upright_axis
        up1 = poses[-1].rot_matrix() @ task.upright_axis
        final = centers[-1]
        return (
            final[2] - task.table_height <= th.pp_table
            and float(np.linalg.norm(final - task.goal3d)) <= th.pp_pos
            and _angle_between(up0, up1) <= math.radians(th.pp_upright_deg)
        )

    if task.kind is TaskKind.POUR:
        task._require("goal3d", "upright_axis")
        up0 = poses[0].rot_matrix() @ task.upright_axis
        up1 = poses[-1].rot_matrix() @ task.upright_axis
        tilt = _angle_between(up0, up1)
        disp = up1 - up0
        to_goal = task.goal3d - centers[0]
        dot = disp[0] * to_goal[0] + disp[1] * to_goal[1]  # horizontal only
        return (
            tilt > math.radians(th.pour_tilt_deg)
            and dot > 0.0
            and float(np.linalg.norm(centers[-1] - task.goal3d)) <= th.pour_pos
        )

    if task.kind is TaskKind.STIR:
        task._require("region_center")
        length = cylinder_path_length(centers, task.region_center, th.stir_r, th.stir_h)
        return length > th.stir_path

    if task.kind is TaskKind.DRAW:
        task._require("region_center")
        length = cylinder_path_length(centers, task.region_center, th.draw_r, th.draw_h)
        return length > th.draw_path

    raise MissingField(f"unknown task kind {task.kind!r}")
