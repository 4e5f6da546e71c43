"""Kinematic serial-arm simulator for grasp-plus-trajectory feasibility.

Arms are standard-DH chains (A = Rz(theta + offset) Tz(d) Tx(a) Rx(alpha))
loaded from JSON configs that also carry joint limits, collision capsules,
a home configuration, and a frozen forward-kinematics self-test fixture.

Execution is purely kinematic: the arm teleports to an IK solution of the
grasp pose, the object becomes rigidly attached to the end-effector, and
the 16 relative waypoints are tracked with damped-least-squares IK under
sub-stepping (at most 2 cm / 0.05 rad per sub-step).  Collision checking
covers link capsules against the table half-space z <= table_height with a
strict penetration inequality (tangency is no collision).  Only distal-link
capsules are listed in the configs; the base column sits on the table by
design and is not checked.

No dynamics, no contact physics, no randomized IK restarts: identical
inputs give bit-identical results.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from importlib import resources

import numpy as np

from .geom import Pose, PoseTrajectory, WaypointTrajectory, _slerp, compose, grasp_to_ee_trajectory, inverse, matrix_to_rotvec, rotation_distance

__all__ = [
    "ArmModel",
    "Scene",
    "ExecutionResult",
    "FailureMode",
    "CollisionReport",
    "OutOfLimits",
    "IkUnreachable",
    "load_arm",
    "list_arms",
    "fk",
    "solve_ik",
    "check_collision",
    "execute_grasp_trajectory",
]

_IK_DAMPING = 1e-3
_IK_STEP_CLAMP = 0.2
_IK_MAX_ITERS = 200
_IK_POS_TOL = 1e-3
_IK_ROT_TOL = 1e-2
_LIMIT_TOL = 1e-9

_SUBSTEP_TRANS = 0.02
_SUBSTEP_ROT = 0.05
_DIVERGE_JUMP = 0.5  # rad, inf-norm joint jump within one sub-step


class OutOfLimits(ValueError):
    """Joint vector violates the arm's limits beyond tolerance."""


class IkUnreachable(RuntimeError):
    """Damped-least-squares IK did not meet the pose tolerance."""


class FailureMode(Enum):
    NONE = "None"
    IK_UNREACHABLE = "IkUnreachable"
    JOINT_LIMIT = "JointLimit"
    TABLE_COLLISION = "TableCollision"
    CONTROLLER_DIVERGED = "ControllerDiverged"


@dataclass(frozen=True)
class CollisionReport:
    kind: str  # "table"; enum left open for future self-collision
    capsule_index: int
    joint_index: int
    depth: float  # penetration depth in meters


@dataclass(frozen=True, eq=False)
class ArmModel:
    name: str
    dh_rows: tuple  # of (a, alpha, d, theta_offset)
    joint_limits: np.ndarray  # (n, 2) radians
    link_capsules: tuple  # of (joint_index, p0, p1, radius), link-frame
    base_pose: Pose
    home_q: np.ndarray

    def __post_init__(self):
        rows = tuple(tuple(float(x) for x in r) for r in self.dh_rows)
        n = len(rows)
        if not 6 <= n <= 8:
            raise ValueError(f"joint count must be 6..8, got {n}")
        lim = np.asarray(self.joint_limits, dtype=float).reshape(n, 2)
        if np.any(lim[:, 0] >= lim[:, 1]):
            raise ValueError("joint limits need lo < hi")
        caps = []
        for jidx, p0, p1, radius in self.link_capsules:
            if not 0 <= int(jidx) < n:
                raise ValueError(f"capsule joint_index {jidx} out of range")
            if not float(radius) > 0.0:
                raise ValueError("capsule radius must be positive")
            caps.append(
                (
                    int(jidx),
                    np.asarray(p0, dtype=float).reshape(3),
                    np.asarray(p1, dtype=float).reshape(3),
                    float(radius),
                )
            )
        home = np.asarray(self.home_q, dtype=float).reshape(n)
        lim.flags.writeable = False
        home.flags.writeable = False
        object.__setattr__(self, "dh_rows", rows)
        object.__setattr__(self, "joint_limits", lim)
        object.__setattr__(self, "link_capsules", tuple(caps))
        object.__setattr__(self, "home_q", home)

    @property
    def n_joints(self) -> int:
        return len(self.dh_rows)


@dataclass(frozen=True, eq=False)
class Scene:
    table_height: float = 0.0
    workspace_box: np.ndarray = None  # (2, 3): [min_corner, max_corner]

    def __post_init__(self):
        box = self.workspace_box
        if box is None:
            box = np.array([[-1.0, -1.0, self.table_height], [1.0, 1.0, self.table_height + 1.5]])
        box = np.asarray(box, dtype=float).reshape(2, 3)
        if np.any(box[0] >= box[1]):
            raise ValueError("workspace box needs min < max per axis")
        if box[0, 2] < self.table_height:
            raise ValueError("workspace box must sit above the table")
        box.flags.writeable = False
        object.__setattr__(self, "workspace_box", box)


@dataclass(frozen=True, eq=False)
class ExecutionResult:
    success: bool
    failure: FailureMode
    realized_traj: PoseTrajectory  # attached-object pose per sub-step
    joint_path: tuple  # joint vector per sub-step, parallel to realized_traj

    def __post_init__(self):
        if self.success != (self.failure is FailureMode.NONE):
            raise ValueError("success must hold exactly when failure is None")


# -- config loading -----------------------------------------------------------

_ARM_PACKAGE = "psidesk.arms"


def list_arms():
    """Names of the arm configs shipped with the package."""
    names = []
    for entry in resources.files(_ARM_PACKAGE).iterdir():
        if entry.name.endswith(".json"):
            names.append(entry.name[:-5])
    return sorted(names)


def load_arm(name_or_path: str) -> ArmModel:
    """Load an arm config by shipped name (e.g. "ur5e") or by file path."""
    text = None
    if "/" not in str(name_or_path) and not str(name_or_path).endswith(".json"):
        candidate = resources.files(_ARM_PACKAGE) / f"{name_or_path}.json"
        if candidate.is_file():
            text = candidate.read_text()
    if text is None:
        with open(name_or_path) as f:
            text = f.read()
    doc = json.loads(text)
    base = doc.get("base_pose", {"rotvec": [0, 0, 0], "trans": [0, 0, 0]})
    arm = ArmModel(
        name=doc["name"],
        dh_rows=[(r["a"], r["alpha"], r["d"], r["theta_offset"]) for r in doc["dh_rows"]],
        joint_limits=doc["joint_limits"],
        link_capsules=[
            (c["joint_index"], c["p0"], c["p1"], c["radius"]) for c in doc["link_capsules"]
        ],
        base_pose=Pose(np.array(base["rotvec"], dtype=float), np.array(base["trans"], dtype=float)),
        home_q=doc["home_q"],
    )
    self_test = doc.get("self_test")
    if self_test is not None:
        ee, _ = fk(arm, arm.home_q)
        want = Pose(
            np.array(self_test["home_ee"]["rotvec"], dtype=float),
            np.array(self_test["home_ee"]["trans"], dtype=float),
        )
        if (
            np.linalg.norm(ee.trans - want.trans) > 1e-9
            or rotation_distance(ee, want) > 1e-9
        ):
            raise ValueError(f"arm config {arm.name}: self-test forward kinematics mismatch")
    return arm


# -- kinematics ----------------------------------------------------------------


def _check_limits(arm: ArmModel, q: np.ndarray) -> None:
    lim = arm.joint_limits
    if np.any(q < lim[:, 0] - _LIMIT_TOL) or np.any(q > lim[:, 1] + _LIMIT_TOL):
        raise OutOfLimits(f"joint vector outside limits for {arm.name}")


def _dh_mat(a, alpha, d, theta):
    ct, st = math.cos(theta), math.sin(theta)
    ca, sa = math.cos(alpha), math.sin(alpha)
    return np.array(
        [
            [ct, -st * ca, st * sa, a * ct],
            [st, ct * ca, -ct * sa, a * st],
            [0.0, sa, ca, d],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def _fk_mats(arm: ArmModel, q: np.ndarray):
    """World 4x4 transforms of every link frame (after each joint)."""
    t = arm.base_pose.matrix()
    out = []
    for (a, alpha, d, off), qi in zip(arm.dh_rows, q):
        t = t @ _dh_mat(a, alpha, d, qi + off)
        out.append(t)
    return out


def fk(arm: ArmModel, q) -> tuple:
    """Forward kinematics: (end-effector Pose, per-link Pose list).

    Raises:
        OutOfLimits: q outside the joint limits by more than 1e-9.
    """
    q = np.asarray(q, dtype=float).reshape(arm.n_joints)
    _check_limits(arm, q)
    mats = _fk_mats(arm, q)
    poses = [Pose(matrix_to_rotvec(m[:3, :3]), m[:3, 3]) for m in mats]
    return poses[-1], poses


def _pose_error(current: np.ndarray, target_r: np.ndarray, target_t: np.ndarray):
    e_pos = target_t - current[:3, 3]
    e_rot = matrix_to_rotvec(target_r @ current[:3, :3].T)
    return e_pos, e_rot


def _dls_ik(arm, target_r, target_t, q_seed, clamp_limits=True):
    q = np.array(q_seed, dtype=float)
    lim = arm.joint_limits
    n = arm.n_joints
    for _ in range(_IK_MAX_ITERS):
        mats = _fk_mats(arm, q)
        ee = mats[-1]
        e_pos, e_rot = _pose_error(ee, target_r, target_t)
        if np.linalg.norm(e_pos) < _IK_POS_TOL and np.linalg.norm(e_rot) < _IK_ROT_TOL:
            return q, True
        jac = np.empty((6, n))
        prev_origin = arm.base_pose.trans
        prev_z = arm.base_pose.rot_matrix()[:, 2]
        o_ee = ee[:3, 3]
        for i in range(n):
            jac[:3, i] = np.cross(prev_z, o_ee - prev_origin)
            jac[3:, i] = prev_z
            prev_origin = mats[i][:3, 3]
            prev_z = mats[i][:3, 2]
        err = np.concatenate([e_pos, e_rot])
        jjt = jac @ jac.T + (_IK_DAMPING**2) * np.eye(6)
        dq = jac.T @ np.linalg.solve(jjt, err)
        peak = float(np.max(np.abs(dq)))
        if peak > _IK_STEP_CLAMP:
            dq *= _IK_STEP_CLAMP / peak
        q = q + dq
        if clamp_limits:
            q = np.clip(q, lim[:, 0], lim[:, 1])
    mats = _fk_mats(arm, q)
    e_pos, e_rot = _pose_error(mats[-1], target_r, target_t)
    ok = np.linalg.norm(e_pos) < _IK_POS_TOL and np.linalg.norm(e_rot) < _IK_ROT_TOL
    return q, ok


def solve_ik(arm: ArmModel, target: Pose, q_seed) -> np.ndarray:
    """Damped-least-squares IK with per-iteration step clamping.

    Joint limits are enforced by clamping each iterate.  Deterministic: no
    random restarts.

    Raises:
        IkUnreachable: tolerance (1 mm, 0.01 rad) not met within 200 iters.
    """
    q_seed = np.asarray(q_seed, dtype=float).reshape(arm.n_joints)
    _check_limits(arm, q_seed)
    q, ok = _dls_ik(arm, target.rot_matrix(), target.trans, q_seed)
    if not ok:
        raise IkUnreachable(f"IK failed for {arm.name}")
    return q


def check_collision(arm: ArmModel, q, scene: Scene):
    """First link capsule penetrating the table half-space, or None.

    Penetration requires segment-to-plane distance strictly below the
    capsule radius; a tangent capsule does not collide.
    """
    q = np.asarray(q, dtype=float).reshape(arm.n_joints)
    mats = _fk_mats(arm, q)
    for idx, (jidx, p0, p1, radius) in enumerate(arm.link_capsules):
        m = mats[jidx]
        z0 = float(m[2, :3] @ p0 + m[2, 3])
        z1 = float(m[2, :3] @ p1 + m[2, 3])
        clearance = min(z0, z1) - scene.table_height
        if clearance < radius:
            return CollisionReport(
                kind="table", capsule_index=idx, joint_index=jidx, depth=radius - clearance
            )
    return None


# -- execution -----------------------------------------------------------------


def _classify_ik_failure(arm, target_r, target_t, q_seed) -> FailureMode:
    # reachable without limit clamping means the limits were the obstacle
    _, ok = _dls_ik(arm, target_r, target_t, q_seed, clamp_limits=False)
    return FailureMode.JOINT_LIMIT if ok else FailureMode.IK_UNREACHABLE


def execute_grasp_trajectory(
    arm: ArmModel,
    grasp: Pose,
    rel: WaypointTrajectory,
    u,
    scene: Scene,
) -> ExecutionResult:
    """Execute a grasp followed by a relative object trajectory.

    The arm teleports to an IK solution of the grasp pose from its home
    configuration, the object is rigidly attached to the end-effector, and
    each subsequent end-effector waypoint is tracked with warm-started IK in
    sub-steps of at most 2 cm / 0.05 rad, checking joint limits and table
    collision at every sub-step.  Failures are reported in the result, never
    raised.
    """
    u = np.asarray(u, dtype=float).reshape(3)
    ee_waypoints = grasp_to_ee_trajectory(grasp, rel, u)

    # before attachment: arm at home, object unmoved
    entries = [(0, Pose.identity())]
    joint_path = [arm.home_q]

    def result(failure):
        return ExecutionResult(
            success=failure is FailureMode.NONE,
            failure=failure,
            realized_traj=PoseTrajectory(frame_id="object", entries=tuple(entries)),
            joint_path=tuple(joint_path),
        )

    target = ee_waypoints[0]
    try:
        q = solve_ik(arm, target, arm.home_q)
    except IkUnreachable:
        return result(_classify_ik_failure(arm, target.rot_matrix(), target.trans, arm.home_q))
    if check_collision(arm, q, scene) is not None:
        return result(FailureMode.TABLE_COLLISION)

    ee0, _ = fk(arm, q)
    ee0_inv = inverse(ee0)
    joint_path[0] = q
    prev_pose = target  # interpolate the commanded waypoint chain
    step = 0

    for target in ee_waypoints[1:]:
        dist = float(np.linalg.norm(target.trans - prev_pose.trans))
        rot = rotation_distance(target, prev_pose)
        n_sub = max(1, math.ceil(dist / _SUBSTEP_TRANS), math.ceil(rot / _SUBSTEP_ROT))
        for s in range(1, n_sub + 1):
            sub_target = _slerp(prev_pose, target, s / n_sub)
            try:
                q_new = solve_ik(arm, sub_target, q)
            except IkUnreachable:
                return result(
                    _classify_ik_failure(arm, sub_target.rot_matrix(), sub_target.trans, q)
                )
            if float(np.max(np.abs(q_new - q))) > _DIVERGE_JUMP:
                return result(FailureMode.CONTROLLER_DIVERGED)
            if check_collision(arm, q_new, scene) is not None:
                return result(FailureMode.TABLE_COLLISION)
            q = q_new
            step += 1
            ee_now, _ = fk(arm, q)
            entries.append((step, compose(ee_now, ee0_inv)))
            joint_path.append(q)
        prev_pose = target

    return result(FailureMode.NONE)
