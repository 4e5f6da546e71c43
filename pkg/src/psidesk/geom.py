"""SE(3) poses as rotation-vector + translation, and trajectory utilities.

Conventions used throughout the package:

- A ``Pose`` (R, t) maps a point as ``x -> R @ x + t``.  Rotations are stored
  as rotation vectors (axis-angle, radians * unit axis); matrices are only
  transient intermediates.
- ``compose(a, b)`` is ``a o b``: apply ``b`` first, then ``a``.
- Rotation vectors are canonicalized to ``norm <= pi``.  Ties at exactly pi
  pick the axis with nonnegative z component (then y, then x).
- Relative object-frame poses are expressed in a frame centered at the object
  center ``u`` whose axes coincide with the source frame's axes.

All types are immutable values and all operations are pure functions.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Pose",
    "PoseTrajectory",
    "WaypointTrajectory",
    "NotARotation",
    "DegenerateTrajectory",
    "rotvec_to_matrix",
    "matrix_to_rotvec",
    "canonicalize_rotvec",
    "compose",
    "inverse",
    "rotation_distance",
    "resample_trajectory",
    "to_object_frame",
    "from_object_frame",
    "apply_relative",
    "grasp_to_ee_trajectory",
    "save_trajectory",
    "load_trajectory",
]

# Below this rotation magnitude, Rodrigues terms are replaced by their
# second-order Taylor expansions (error < 1e-20 at the switch point).
_TINY_ANGLE = 1e-10

# Orthonormality tolerance for matrix_to_rotvec's precondition check.
_ORTHO_TOL = 1e-6


class NotARotation(ValueError):
    """Matrix fails the orthonormality / determinant check."""


class DegenerateTrajectory(UserWarning):
    """Resampling a single-pose trajectory to more than one waypoint."""


def _as_vec3(v, name: str) -> np.ndarray:
    a = np.asarray(v, dtype=float).reshape(-1)
    if a.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} must be finite, got {a}")
    return a


def _skew(v: np.ndarray) -> np.ndarray:
    return np.array(
        [[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]], dtype=float
    )


def canonicalize_rotvec(r: np.ndarray) -> np.ndarray:
    """Map a rotation vector to the equivalent one with norm <= pi.

    Magnitudes above pi wrap to the short rotation about the opposite axis.
    At exactly pi the sign is fixed so the first nonzero component in
    (z, y, x) order is nonnegative.
    """
    r = np.asarray(r, dtype=float).copy()
    theta = float(np.linalg.norm(r))
    if theta > math.pi:
        wrapped = math.fmod(theta, 2.0 * math.pi)
        if wrapped > math.pi:
            wrapped -= 2.0 * math.pi
        r = r * (wrapped / theta)
        theta = abs(wrapped)
    if abs(theta - math.pi) < 1e-12:
        for i in (2, 1, 0):
            if abs(r[i]) > 1e-12:
                if r[i] < 0.0:
                    r = -r
                break
    return r


@dataclass(frozen=True, eq=False)
class Pose:
    """Rigid transform: rotation vector (radians * axis) + translation (m)."""

    rotvec: np.ndarray = field(default_factory=lambda: np.zeros(3))
    trans: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        r = canonicalize_rotvec(_as_vec3(self.rotvec, "rotvec"))
        t = _as_vec3(self.trans, "trans")
        r.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "rotvec", r)
        object.__setattr__(self, "trans", t)

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.zeros(3), np.zeros(3))

    @staticmethod
    def from_matrix(m: np.ndarray) -> "Pose":
        """Build from a 4x4 homogeneous matrix."""
        m = np.asarray(m, dtype=float)
        return Pose(matrix_to_rotvec(m[:3, :3]), m[:3, 3])

    def rot_matrix(self) -> np.ndarray:
        return rotvec_to_matrix(self.rotvec)

    def matrix(self) -> np.ndarray:
        """4x4 homogeneous matrix."""
        m = np.eye(4)
        m[:3, :3] = self.rot_matrix()
        m[:3, 3] = self.trans
        return m

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform a point (3,) or point array (N, 3)."""
        pts = np.asarray(points, dtype=float)
        r = self.rot_matrix()
        if pts.ndim == 1:
            return r @ pts + self.trans
        return pts @ r.T + self.trans

    def is_identity(self, tol: float = 1e-12) -> bool:
        return (
            float(np.linalg.norm(self.rotvec)) <= tol
            and float(np.linalg.norm(self.trans)) <= tol
        )

    def __repr__(self) -> str:
        r = np.array2string(self.rotvec, precision=6, suppress_small=True)
        t = np.array2string(self.trans, precision=6, suppress_small=True)
        return f"Pose(rotvec={r}, trans={t})"


@dataclass(frozen=True, eq=False)
class PoseTrajectory:
    """Ordered poses indexed by frame, all expressed in frame ``frame_id``."""

    frame_id: str
    entries: tuple  # of (frame_index, Pose)

    def __post_init__(self):
        entries = tuple((int(i), p) for i, p in self.entries)
        if not entries:
            raise ValueError("PoseTrajectory must be nonempty")
        idx = [i for i, _ in entries]
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("frame indices must be strictly increasing")
        if idx[0] < 0:
            raise ValueError("frame indices must be >= 0")
        object.__setattr__(self, "entries", entries)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def indices(self) -> list:
        return [i for i, _ in self.entries]

    @property
    def poses(self) -> list:
        return [p for _, p in self.entries]

    def pose_at(self, frame_index: int) -> Pose:
        for i, p in self.entries:
            if i == frame_index:
                return p
        raise KeyError(frame_index)


@dataclass(frozen=True, eq=False)
class WaypointTrajectory:
    """Exactly 16 relative poses in the u-centered object frame."""

    waypoints: tuple  # of Pose

    N_WAYPOINTS = 16

    def __post_init__(self):
        wps = tuple(self.waypoints)
        if len(wps) != self.N_WAYPOINTS:
            raise ValueError(f"expected {self.N_WAYPOINTS} waypoints, got {len(wps)}")
        object.__setattr__(self, "waypoints", wps)

    def __len__(self) -> int:
        return len(self.waypoints)

    def __iter__(self):
        return iter(self.waypoints)

    def __getitem__(self, i):
        return self.waypoints[i]


def rotvec_to_matrix(r) -> np.ndarray:
    """Rotation vector to 3x3 rotation matrix (Rodrigues formula)."""
    r = np.asarray(r, dtype=float).reshape(3)
    theta = float(np.linalg.norm(r))
    k = _skew(r)
    if theta < _TINY_ANGLE:
        return np.eye(3) + k + 0.5 * (k @ k)
    a = math.sin(theta) / theta
    b = (1.0 - math.cos(theta)) / (theta * theta)
    return np.eye(3) + a * k + b * (k @ k)


def matrix_to_rotvec(m) -> np.ndarray:
    """Rotation matrix to rotation vector with norm <= pi.

    Goes through the quaternion to stay accurate near the pi-rotation
    branch where the trace formula degenerates.

    Raises:
        NotARotation: if `m` fails the orthonormality check (1e-6).
    """
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3):
        raise NotARotation(f"expected 3x3 matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NotARotation("matrix has non-finite entries")
    if np.max(np.abs(m.T @ m - np.eye(3))) > _ORTHO_TOL:
        raise NotARotation("matrix is not orthonormal within 1e-6")
    if np.linalg.det(m) < 0.0:
        raise NotARotation("matrix has negative determinant")

    # Shepperd's method: pick the numerically largest quaternion component.
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    if tr > 0.0:
        s = math.sqrt(tr + 1.0) * 2.0
        w = 0.25 * s
        x = (m[2, 1] - m[1, 2]) / s
        y = (m[0, 2] - m[2, 0]) / s
        z = (m[1, 0] - m[0, 1]) / s
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
        w = (m[2, 1] - m[1, 2]) / s
        x = 0.25 * s
        y = (m[0, 1] + m[1, 0]) / s
        z = (m[0, 2] + m[2, 0]) / s
    elif m[1, 1] > m[2, 2]:
        s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
        w = (m[0, 2] - m[2, 0]) / s
        x = (m[0, 1] + m[1, 0]) / s
        y = 0.25 * s
        z = (m[1, 2] + m[2, 1]) / s
    else:
        s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
        w = (m[1, 0] - m[0, 1]) / s
        x = (m[0, 2] + m[2, 0]) / s
        y = (m[1, 2] + m[2, 1]) / s
        z = 0.25 * s

    if w < 0.0:  # shortest rotation
        w, x, y, z = -w, -x, -y, -z

    v = np.array([x, y, z], dtype=float)
    vn = float(np.linalg.norm(v))
    if vn < _TINY_ANGLE:
        return 2.0 * v  # theta ~ 0: rotvec ~ 2 * vector part
    theta = 2.0 * math.atan2(vn, w)
    return canonicalize_rotvec(v / vn * theta)


def compose(a: Pose, b: Pose) -> Pose:
    """a o b: apply ``b`` first, then ``a``."""
    ra = a.rot_matrix()
    return Pose(
        matrix_to_rotvec(ra @ b.rot_matrix()),
        ra @ b.trans + a.trans,
    )


def inverse(p: Pose) -> Pose:
    rt = p.rot_matrix().T
    return Pose(-p.rotvec, -(rt @ p.trans))


def rotation_distance(a: Pose, b: Pose) -> float:
    """Magnitude of the relative rotation between two poses, in [0, pi].

    Computed through the quaternion extraction rather than acos of the
    trace: the atan2 form stays accurate near 0 and pi, where the trace
    formula loses half the significant digits.
    """
    rel = a.rot_matrix().T @ b.rot_matrix()
    return float(np.linalg.norm(matrix_to_rotvec(rel)))


def _slerp(a: Pose, b: Pose, t: float) -> Pose:
    """Interpolate rotation geodesically and translation linearly."""
    ra = a.rot_matrix()
    rel = matrix_to_rotvec(ra.T @ b.rot_matrix())
    r = ra @ rotvec_to_matrix(rel * t)
    return Pose(matrix_to_rotvec(r), (1.0 - t) * a.trans + t * b.trans)


def resample_trajectory(traj: PoseTrajectory, n: int = 16) -> list:
    """Resample to ``n`` poses, uniform in the frame-index coordinate.

    Endpoints are preserved exactly; interior samples interpolate between
    the bracketing frames (slerp for rotation, lerp for translation).

    A single-entry trajectory with n > 1 returns n copies of its pose and
    emits a DegenerateTrajectory warning.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    entries = traj.entries
    if len(entries) == 1:
        if n > 1:
            warnings.warn(
                "resampling a 1-pose trajectory; returning copies",
                DegenerateTrajectory,
                stacklevel=2,
            )
        return [entries[0][1]] * n
    if n == 1:
        return [entries[0][1]]

    idx = np.array([i for i, _ in entries], dtype=float)
    poses = [p for _, p in entries]
    out = []
    for j in range(n):
        s = idx[0] + (idx[-1] - idx[0]) * j / (n - 1)
        k = int(np.searchsorted(idx, s, side="right")) - 1
        k = min(max(k, 0), len(poses) - 2)
        span = idx[k + 1] - idx[k]
        t = (s - idx[k]) / span
        if t <= 0.0:
            out.append(poses[k])
        elif t >= 1.0:
            out.append(poses[k + 1])
        else:
            out.append(_slerp(poses[k], poses[k + 1], float(t)))
    return out


def _translate(v: np.ndarray) -> Pose:
    return Pose(np.zeros(3), v)


def to_object_frame(traj: PoseTrajectory, u) -> PoseTrajectory:
    """Re-express a trajectory as relative poses about the object center u.

    The output pose ``D_i`` satisfies ``x_i = R_i (x_0 - u) + u + t_i`` for
    any point ``x`` rigidly attached to the object, where ``x_0`` is its
    position at the trajectory's first entry.  ``D_0`` is the identity.
    The object frame shares the axes of the source frame.
    """
    u = _as_vec3(u, "u")
    t0_inv = inverse(traj.entries[0][1])
    tu, tu_inv = _translate(u), _translate(-u)
    out = []
    for i, p in traj.entries:
        delta = compose(tu_inv, compose(compose(p, t0_inv), tu))
        out.append((i, delta))
    return PoseTrajectory(frame_id=f"{traj.frame_id}/object", entries=tuple(out))


def apply_relative(delta: Pose, u) -> Pose:
    """World-frame transform of an object-frame relative pose about u."""
    u = _as_vec3(u, "u")
    return compose(_translate(u), compose(delta, _translate(-u)))


def from_object_frame(rel: PoseTrajectory, u, first_pose: Pose, frame_id: str = None) -> PoseTrajectory:
    """Inverse of :func:`to_object_frame`: rebuild absolute poses."""
    out = []
    for i, d in rel.entries:
        out.append((i, compose(apply_relative(d, u), first_pose)))
    return PoseTrajectory(frame_id=frame_id or rel.frame_id, entries=tuple(out))


def grasp_to_ee_trajectory(grasp: Pose, rel, u) -> list:
    """End-effector poses obtained by moving ``grasp`` rigidly with the object.

    ``rel`` is a sequence of relative object-frame poses with rel[0] equal to
    the identity, so the first output pose equals ``grasp``.
    """
    rel = list(rel)
    if rel and not rel[0].is_identity(1e-9):
        raise ValueError("rel[0] must be the identity pose")
    return [compose(apply_relative(d, u), grasp) for d in rel]


def _pose_to_dict(p: Pose) -> dict:
    return {"rotvec": [float(x) for x in p.rotvec], "trans": [float(x) for x in p.trans]}


def _pose_from_dict(d: dict) -> Pose:
    return Pose(np.array(d["rotvec"], dtype=float), np.array(d["trans"], dtype=float))


def save_trajectory(traj: PoseTrajectory, path) -> None:
    """Write a trajectory file (JSON; floats keep full precision)."""
    doc = {
        "frame_id": traj.frame_id,
        "entries": [
            {"index": i, **_pose_to_dict(p)} for i, p in traj.entries
        ],
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=1, sort_keys=True)
        f.write("\n")


def load_trajectory(path) -> PoseTrajectory:
    with open(path) as f:
        doc = json.load(f)
    entries = tuple((e["index"], _pose_from_dict(e)) for e in doc["entries"])
    return PoseTrajectory(frame_id=doc["frame_id"], entries=entries)
