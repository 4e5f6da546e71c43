"""Anchor grasps, candidate grasps, nearest-anchor assignment, and selection.

Eight anchor grasps surround the object center u: four azimuths (cardinal
directions in the robot-base frame) times two elevation angles (10 and 50
degrees), approaching inward and downward toward u.  Candidates produced by
any external generator are assigned to the rotationally nearest anchor and
inherit that anchor's predicted success score; the highest-scoring candidate
is selected.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .geom import Pose, matrix_to_rotvec, rotation_distance

__all__ = [
    "AnchorGraspSet",
    "CandidateGrasp",
    "GraspScores",
    "EmptyCandidates",
    "N_ANCHORS",
    "ANCHOR_AZIMUTHS_DEG",
    "ANCHOR_ELEVATIONS_DEG",
    "generate_anchors",
    "assign_candidate",
    "select_grasp",
    "generate_candidates_grid",
    "save_candidates",
    "load_candidates",
]

N_ANCHORS = 8
ANCHOR_AZIMUTHS_DEG = (0.0, 90.0, 180.0, 270.0)
ANCHOR_ELEVATIONS_DEG = (10.0, 50.0)


class EmptyCandidates(ValueError):
    """Selection requires at least one candidate."""


@dataclass(frozen=True, eq=False)
class AnchorGraspSet:
    anchors: tuple  # of 8 Pose, index k = 2 * azimuth_index + elevation_index

    def __post_init__(self):
        anchors = tuple(self.anchors)
        if len(anchors) != N_ANCHORS:
            raise ValueError(f"expected {N_ANCHORS} anchors, got {len(anchors)}")
        object.__setattr__(self, "anchors", anchors)

    def __len__(self):
        return N_ANCHORS

    def __getitem__(self, k):
        return self.anchors[k]


@dataclass(frozen=True)
class CandidateGrasp:
    pose: Pose
    provenance: str = ""

    def __post_init__(self):
        if not (np.all(np.isfinite(self.pose.rotvec)) and np.all(np.isfinite(self.pose.trans))):
            raise ValueError("candidate pose must be finite")


@dataclass(frozen=True, eq=False)
class GraspScores:
    scores: np.ndarray  # 8 floats in [0, 1]

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=float).reshape(N_ANCHORS)
        if np.any(s < 0.0) or np.any(s > 1.0) or not np.all(np.isfinite(s)):
            raise ValueError("scores must lie in [0, 1]")
        s.flags.writeable = False
        object.__setattr__(self, "scores", s)

    def __getitem__(self, k):
        return float(self.scores[k])


def _anchor_orientation(approach: np.ndarray) -> np.ndarray:
    # z along approach; x horizontal (world-z cross approach); y completes.
    # approach is never parallel to world z at elevations 10/50 degrees.
    z = approach / np.linalg.norm(approach)
    x = np.cross([0.0, 0.0, 1.0], z)
    x = x / np.linalg.norm(x)
    y = np.cross(z, x)
    return np.column_stack([x, y, z])


def generate_anchors(u, standoff: float = 0.0) -> AnchorGraspSet:
    """Eight inward-and-downward anchor grasps centered on u.

    Azimuth angles 0/90/180/270 degrees in the robot-base frame (outer
    index), elevations 10/50 degrees (inner index).  The approach axis points
    from the (azimuth, elevation) direction toward u; with zero standoff the
    grasp origin sits exactly at u.
    """
    u = np.asarray(u, dtype=float).reshape(3)
    if not np.all(np.isfinite(u)):
        raise ValueError("u must be finite")
    anchors = []
    for az_deg in ANCHOR_AZIMUTHS_DEG:
        for el_deg in ANCHOR_ELEVATIONS_DEG:
            az = math.radians(az_deg)
            el = math.radians(el_deg)
            outward = np.array(
                [math.cos(el) * math.cos(az), math.cos(el) * math.sin(az), math.sin(el)]
            )
            approach = -outward
            rot = _anchor_orientation(approach)
            pos = u + standoff * outward
            anchors.append(Pose(matrix_to_rotvec(rot), pos))
    return AnchorGraspSet(tuple(anchors))


def assign_candidate(c: CandidateGrasp, anchors: AnchorGraspSet) -> int:
    """Index of the anchor nearest in rotation; ties take the lowest index."""
    dists = [rotation_distance(c.pose, a) for a in anchors.anchors]
    return int(np.argmin(dists))


def select_grasp(candidates, scores: GraspScores, anchors: AnchorGraspSet) -> CandidateGrasp:
    """Candidate with the highest inherited anchor score; ties keep order.

    Raises:
        EmptyCandidates: no candidates supplied.
    """
    candidates = list(candidates)
    if not candidates:
        raise EmptyCandidates("no candidate grasps to select from")
    best = None
    best_score = -math.inf
    for c in candidates:
        s = scores[assign_candidate(c, anchors)]
        if s > best_score:
            best, best_score = c, s
    return best


def generate_candidates_grid(u, n_per_anchor: int, jitter_rot: float, seed: int):
    """Seeded rotational jitter of each anchor, magnitude at most jitter_rot.

    Stands in for an external grasp generator: n_per_anchor candidates per
    anchor, deterministic for a fixed seed.
    """
    if n_per_anchor < 1:
        raise ValueError("n_per_anchor must be >= 1")
    if jitter_rot < 0.0:
        raise ValueError("jitter_rot must be >= 0")
    rng = np.random.default_rng(seed)
    anchors = generate_anchors(u)
    out = []
    for k, anchor in enumerate(anchors.anchors):
        for i in range(n_per_anchor):
            axis = rng.normal(size=3)
            axis /= np.linalg.norm(axis)
            angle = rng.uniform(0.0, jitter_rot)
            jitter = Pose(angle * axis, np.zeros(3))
            pose = Pose(
                matrix_to_rotvec(jitter.rot_matrix() @ anchor.rot_matrix()), anchor.trans
            )
            out.append(CandidateGrasp(pose, provenance=f"grid:{k}:{i}"))
    return out


def save_candidates(candidates, path) -> None:
    doc = [
        {
            "rotvec": [float(x) for x in c.pose.rotvec],
            "trans": [float(x) for x in c.pose.trans],
            "provenance": c.provenance,
        }
        for c in candidates
    ]
    with open(path, "w") as f:
        json.dump(doc, f, indent=1, sort_keys=True)
        f.write("\n")


def load_candidates(path):
    with open(path) as f:
        doc = json.load(f)
    return [
        CandidateGrasp(Pose(np.array(d["rotvec"]), np.array(d["trans"])), d.get("provenance", ""))
        for d in doc
    ]
