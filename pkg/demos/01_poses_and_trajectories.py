"""Rigid poses, composition, and trajectory resampling.

A pose is a rotation vector plus a translation. Composition applies the
right-hand pose first, so compose(world_from_b, b_from_c) maps c-frame
points to the world. This walkthrough builds a small motion, inverts it,
converts a demonstration to the object frame, and resamples it to the
fixed 16-waypoint form the policy consumes.
"""

import numpy as np

from psidesk.geom import (
    Pose,
    PoseTrajectory,
    compose,
    inverse,
    resample_trajectory,
    rotation_distance,
    to_object_frame,
)


def main():
    lift = Pose(np.zeros(3), [0.0, 0.0, 0.10])
    yaw = Pose([0.0, 0.0, np.pi / 6], np.zeros(3))
    motion = compose(lift, yaw)  # yaw first, then lift

    p = np.array([0.30, 0.05, 0.02])
    print("point:", p)
    print("moved:", np.round(motion.apply(p), 4))

    undo = compose(inverse(motion), motion)
    print("inverse check, rotation residual:",
          f"{rotation_distance(undo, Pose.identity()):.2e} rad")

    # a 40-step demonstration: the object twists while drifting in x
    u = np.array([0.45, 0.00, 0.12])
    entries = []
    for i in range(40):
        t = i / 39
        rv = np.array([0.0, 0.0, 0.5 * t])
        r = Pose(rv, np.zeros(3)).rot_matrix()
        trans = u - r @ u + np.array([0.08 * t, 0.0, 0.04 * np.sin(np.pi * t)])
        entries.append((i, Pose(rv, trans)))
    demo = PoseTrajectory(frame_id="cam", entries=tuple(entries))

    rel = to_object_frame(demo, u)
    print("\nobject-frame start is the identity:",
          rel.poses[0].is_identity(1e-12))

    wps = resample_trajectory(rel, 16)
    print("resampled to", len(wps), "waypoints")
    print("final waypoint twist: %.3f rad, drift: %s m"
          % (np.linalg.norm(wps[-1].rotvec), np.round(wps[-1].trans, 3)))


if __name__ == "__main__":
    main()
