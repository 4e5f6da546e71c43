"""Regenerate the committed pipeline fixture under tests/fixtures/pipeline/.

The fixture is fully deterministic (seeded numpy), so rerunning this script
reproduces the directory byte for byte:

    python3 tests/fixtures/make_pipeline_fixture.py

Contents: three episodes on a 0-height table.
  ep_pick  precomputed trajectory, lift + 6 cm carry + set down (kept)
  ep_dive  precomputed trajectory diving below the table (discarded)
  ep_scan  raw point-cloud frames of a bumpy blob, gentle twist (tracked)
"""

import json
from pathlib import Path

import numpy as np

from psidesk.cloud import FrameSequence, PointCloud, save_sequence
from psidesk.geom import Pose, PoseTrajectory, save_trajectory

ROOT = Path(__file__).parent / "pipeline"
U = [0.45, 0.0, 0.12]
TASK = {"kind": "PickPlace", "table_height": 0.0, "upright_axis": [0, 0, 1]}


def blob(n=1200, seed=3):
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(n, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    theta = np.arccos(np.clip(d[:, 2], -1.0, 1.0))
    phi = np.arctan2(d[:, 1], d[:, 0])
    r = 0.12 * (
        1.0
        + 0.26 * np.sin(3.0 * theta) * np.cos(2.0 * phi + 0.7)
        + 0.17 * np.cos(5.0 * phi + 1.3) * np.sin(2.0 * theta)
        + 0.11 * np.cos(7.0 * theta - 0.5) * np.sin(3.0 * phi)
    )
    return d * r[:, None]


def main():
    ROOT.mkdir(parents=True, exist_ok=True)
    n = 24
    entries = []
    for i in range(n):
        t = i / (n - 1)
        entries.append((i, Pose(np.zeros(3), np.array([0.06 * t, 0.0, 0.08 * np.sin(np.pi * t)]))))
    save_trajectory(PoseTrajectory(frame_id="c", entries=tuple(entries)), ROOT / "ep_pick.traj.json")

    entries = tuple(
        (i, Pose(np.zeros(3), np.array([0.0, 0.0, -0.5 * i / (n - 1)]))) for i in range(n)
    )
    save_trajectory(PoseTrajectory(frame_id="c", entries=entries), ROOT / "ep_dive.traj.json")

    pts0 = blob() + U
    frames = []
    for i in range(6):
        t = i / 5
        pose = Pose(
            np.array([0.0, 0.0, 0.04 * t]),
            np.array([0.02 * t, 0.0, 0.015 * np.sin(np.pi * t)]),
        )
        frames.append((i, PointCloud(pose.apply(pts0))))
    save_sequence(FrameSequence(frame_id="c", frames=tuple(frames)), ROOT / "ep_scan")

    manifest = {
        "arm": "xarm7",
        "scene": {"table_height": 0.0},
        "camera": {"fx": 500.0, "fy": 500.0, "cx": 320.0, "cy": 240.0},
        "episodes": [
            {"episode_id": "ep_pick", "u": U, "task": TASK, "trajectory": "ep_pick.traj.json"},
            {"episode_id": "ep_dive", "u": U, "task": TASK, "trajectory": "ep_dive.traj.json"},
            {"episode_id": "ep_scan", "u": U, "task": TASK, "frames": "ep_scan/frames.json"},
        ],
    }
    with open(ROOT / "manifest.json", "w") as f:
        json.dump(manifest, f, indent=1, sort_keys=True)
        f.write("\n")
    print(f"wrote fixture -> {ROOT}")


if __name__ == "__main__":
    main()
