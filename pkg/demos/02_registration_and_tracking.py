"""Scan registration, sequence tracking, and pose-graph refinement.

Generates a bumpy closed blob, registers a perturbed copy of it with
point-to-plane ICP, then tracks the blob through a short synthetic
sequence and refines the tracked poses with loop-closure edges.
"""

import time

import numpy as np

from psidesk.cloud import FrameSequence, PointCloud
from psidesk.geom import Pose, compose, inverse, rotation_distance
from psidesk.posegraph import build_graph, optimize
from psidesk.registration import icp_register, track_sequence


def bumpy_blob(n=2000, seed=0):
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(n, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    theta = np.arccos(np.clip(d[:, 2], -1.0, 1.0))
    phi = np.arctan2(d[:, 1], d[:, 0])
    r = 0.12 * (
        1.0
        + 0.26 * np.sin(3.0 * theta) * np.cos(2.0 * phi + 0.7)
        + 0.17 * np.cos(5.0 * phi + 1.3) * np.sin(2.0 * theta)
    )
    return d * r[:, None]


def main():
    src = bumpy_blob(seed=4)
    truth = Pose([0.05, -0.08, 0.10], [0.03, -0.02, 0.04])
    noisy = truth.apply(src) + np.random.default_rng(1).normal(scale=0.002, size=src.shape)

    t0 = time.perf_counter()
    pose, fitness, rmse = icp_register(PointCloud(src), PointCloud(noisy))
    print("single-pair ICP with 2 mm sensor noise:")
    print(f"  rotation error {rotation_distance(pose, truth) * 1e3:.2f} mrad,"
          f" translation error {np.linalg.norm(pose.trans - truth.trans) * 1e3:.2f} mm")
    print(f"  fitness {fitness:.2f}, rmse {rmse * 1e3:.2f} mm,"
          f" {time.perf_counter() - t0:.2f}s")

    # 12-frame sequence: slow yaw plus drift, one garbage frame in the middle
    poses = [Pose.identity()]
    step = Pose([0.0, 0.0, 0.03], [0.006, 0.0, 0.002])
    for _ in range(11):
        poses.append(compose(step, poses[-1]))
    frames = [(k, PointCloud(p.apply(src))) for k, p in enumerate(poses)]
    frames[6] = (6, PointCloud(src[:80]))  # sensor dropout, too few points
    seq = FrameSequence(frame_id="cam", frames=tuple(frames))

    traj = track_sequence(seq)
    carried = np.array_equal(np.asarray(traj.pose_at(6).trans),
                             np.asarray(traj.pose_at(5).trans))
    print("\ntracked", len(traj), "frames; dropout frame carried forward:", carried)
    err = rotation_distance(traj.poses[-1], poses[-1])
    print(f"endpoint rotation error before refinement: {err * 1e3:.3f} mrad")

    graph = build_graph(traj, seq)
    refined = optimize(graph)
    err2 = rotation_distance(refined.poses[-1], poses[-1])
    print(f"after pose-graph refinement:               {err2 * 1e3:.3f} mrad")
    print("loop closures help most on longer drifts; on 12 clean frames the",
          "tracker is already close")


if __name__ == "__main__":
    main()
