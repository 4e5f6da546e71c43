"""The command-line pipeline end to end, in a temporary workspace.

Writes two demonstration episodes and a manifest, then drives the same
entry points the `psi` executable exposes: filter the episodes into a
labeled dataset, train a policy, predict a trajectory and grasp scores,
select a grasp from generated candidates, and check a task verdict.
"""

import json
import tempfile
from pathlib import Path

import numpy as np

from psidesk.cli import main as psi
from psidesk.geom import Pose, PoseTrajectory, save_trajectory

u = [0.45, 0.0, 0.12]
task = {"kind": "PickPlace", "table_height": 0.0, "upright_axis": [0, 0, 1]}


def lift_and_carry(n=24):
    entries = []
    for i in range(n):
        t = i / (n - 1)
        entries.append((i, Pose(np.zeros(3),
                                [0.06 * t, 0.0, 0.08 * np.sin(np.pi * t)])))
    return PoseTrajectory(frame_id="cam", entries=tuple(entries))


def dive(n=24):
    entries = [(i, Pose(np.zeros(3), [0.0, 0.0, -0.5 * i / (n - 1)]))
               for i in range(n)]
    return PoseTrajectory(frame_id="cam", entries=tuple(entries))


with tempfile.TemporaryDirectory() as tmp:
    ws = Path(tmp)
    save_trajectory(lift_and_carry(), ws / "good.traj.json")
    save_trajectory(dive(), ws / "bad.traj.json")
    manifest = {
        "arm": "xarm7",
        "scene": {"table_height": 0.0},
        "episodes": [
            {"episode_id": "good", "trajectory": "good.traj.json", "u": u, "task": task},
            {"episode_id": "bad", "trajectory": "bad.traj.json", "u": u, "task": task},
        ],
    }
    (ws / "manifest.json").write_text(json.dumps(manifest))

    print("== psi filter ==")
    psi(["filter", "--manifest", str(ws / "manifest.json"),
         "--out", str(ws / "filtered"), "--workers", "2"])

    print("\n== psi train ==")
    psi(["train", "--dataset", str(ws / "filtered" / "dataset.json"),
         "--out", str(ws / "policy")])

    print("\n== psi predict ==")
    psi(["predict", "--model", str(ws / "policy" / "model.json"),
         "--u", "0.45,0.0,0.12"])

    print("\n== psi select ==")
    psi(["select", "--model", str(ws / "policy" / "model.json"),
         "--u", "0.45,0.0,0.12", "--grid", "2", "--jitter", "0.1", "--seed", "5"])

    print("\n== psi eval ==")
    # eval wants a complete task spec; the filter stage infers missing goals, eval does not
    (ws / "task.json").write_text(json.dumps({**task, "goal3d": [0.51, 0.0, 0.12]}))
    code = psi(["eval", "--task", str(ws / "task.json"),
                "--trajectory", str(ws / "good.traj.json"),
                "--u", "0.45,0.0,0.12"])
    print("exit code:", code)
