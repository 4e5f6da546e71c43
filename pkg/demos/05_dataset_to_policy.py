"""From raw demonstrations to a grasp-aware policy.

Builds a dozen synthetic pick-and-carry episodes at random object
positions, labels all eight anchor grasps per episode by simulated
playback, trains the two-stage policy on the survivors, and compares
its grasp choices against picking anchors uniformly at random.
"""

import time

import numpy as np

from psidesk.filterpipe import FilteredDataset, filter_episode
from psidesk.geom import Pose, PoseTrajectory, rotvec_to_matrix
from psidesk.grasp import assign_candidate, generate_anchors, generate_candidates_grid, select_grasp
from psidesk.imitate import features_from_record, predict, train_stage1, train_stage2
from psidesk.simarm import Scene, load_arm
from psidesk.taskeval import TaskSpec


def cone_carry(u, n=16):
    """Tilt sweep plus a 12 cm carry; hard on some anchors, easy on others."""
    u = np.asarray(u, dtype=float)
    entries = []
    for i in range(n):
        t = i / (n - 1)
        phi = np.radians(90.0 + 180.0 * t)
        rv = np.radians(50.0) * np.sin(np.pi * t) * np.array(
            [-np.sin(phi), np.cos(phi), 0.0])
        r = rotvec_to_matrix(rv)
        entries.append((i, Pose(rv, u - r @ u + [0.12 * t, 0.0, 0.0])))
    return PoseTrajectory(frame_id="cam", entries=tuple(entries))


def main():
    rng = np.random.default_rng(11)
    arm = load_arm("franka_panda")
    task = TaskSpec(kind="PickPlace", table_height=0.0, upright_axis=[0, 0, 1])

    t0 = time.perf_counter()
    records = []
    for i in range(12):
        u = np.array([0.50 + 0.14 * rng.random(),
                      -0.04 + 0.08 * rng.random(),
                      0.055 + 0.08 * rng.random()])
        rec = filter_episode(cone_carry(u), u, task, generate_anchors(u),
                             arm, Scene(), f"ep{i:02d}")
        records.append(rec)
        frac = np.mean(rec.grasp_labels)
        print(f"ep{i:02d}: u=({u[0]:.2f},{u[1]:+.2f},{u[2]:.2f})"
              f"  feasible anchors {frac:.0%}")
    ds = FilteredDataset(records=tuple(records), arm_name=arm.name)
    print(f"\nlabeled {ds.stats['total']} episodes in "
          f"{time.perf_counter() - t0:.1f}s, kept {len(ds.kept)}")

    model = train_stage2(train_stage1(ds), ds)

    hits = 0
    for rec in ds.kept:
        anchors = generate_anchors(rec.u)
        cands = generate_candidates_grid(rec.u, 1, 0.0, seed=0)
        _, scores = predict(model, features_from_record(rec))
        pick = select_grasp(cands, scores, anchors)
        hits += rec.grasp_labels[assign_candidate(pick, anchors)]
    print(f"policy-selected grasp works on {hits}/{len(ds.kept)} episodes")

    rb = np.random.default_rng(0)
    draws = [rec.grasp_labels[rb.integers(0, 8)]
             for rec in ds.kept for _ in range(50)]
    print(f"uniform-random anchor works {np.mean(draws):.0%} of the time")


if __name__ == "__main__":
    main()
