"""Kinematic arm playback: FK, IK, and grasp-trajectory execution.

Loads the bundled arm models, solves IK for a reachable target, then
replays one object motion from two different anchor grasps. The low
side grasp drags the gripper into the table; the high grasp survives.
"""

import numpy as np

from psidesk.geom import Pose, WaypointTrajectory
from psidesk.grasp import generate_anchors
from psidesk.simarm import Scene, execute_grasp_trajectory, fk, list_arms, load_arm, solve_ik


def main():
    print("bundled arms:", ", ".join(list_arms()))
    arm = load_arm("franka_panda")
    home_ee, _ = fk(arm, arm.home_q)
    print(f"{arm.name}: {len(arm.home_q)} joints, home EE at",
          np.round(home_ee.trans, 3))

    target = Pose(home_ee.rotvec, home_ee.trans + [0.0, 0.0, -0.05])
    q = solve_ik(arm, target, arm.home_q)
    reached, _ = fk(arm, q)
    print("IK to 5 cm below home, position error:",
          f"{np.linalg.norm(reached.trans - target.trans) * 1e3:.2f} mm")

    # object sitting 8 cm above the table, rolled forward 45 degrees
    u = np.array([0.45, 0.0, 0.08])
    anchors = generate_anchors(u)
    rel = WaypointTrajectory(tuple(
        Pose([0.0, -np.radians(45.0) * i / 15, 0.0], np.zeros(3))
        for i in range(16)
    ))

    for k in (4, 5):
        res = execute_grasp_trajectory(arm, anchors[k], rel, u, Scene())
        outcome = "success" if res.success else res.failure.name
        print(f"anchor {k}: {outcome} after {len(res.realized_traj)} sub-steps")


if __name__ == "__main__":
    main()
