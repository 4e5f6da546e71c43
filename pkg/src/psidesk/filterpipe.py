"""Simulation filtering over a dataset of demonstration episodes.

Each episode contributes an object-pose trajectory (precomputed, or tracked
from a point-cloud sequence), an object center u, and a task spec.  The
pipeline resamples the object-frame trajectory to 16 waypoints, executes it
from all 8 anchor grasps on the configured arm, labels every grasp with
execution success AND task success, and discards episodes where all grasps
fail.

Manifest schema (JSON, paths relative to the manifest file):

    {
      "arm": "xarm7",
      "scene": {"table_height": 0.0},
      "camera": {"fx": 500.0, "fy": 500.0, "cx": 320.0, "cy": 240.0},
      "episodes": [
        {"episode_id": "ep000",
         "u": [0.45, 0.0, 0.08],
         "task": {"kind": "PickPlace", ...},
         "trajectory": "ep000.traj.json"},     # or "frames": "ep000/frames.json"
        ...
      ]
    }

Frame c doubles as the camera frame: the optional intrinsics project
frame-c coordinates directly.  When a PickPlace episode has no explicit 2D
goal and intrinsics are present, goal2d is the projection of the final
object center.  Filtering goals default to the demonstration itself: a
PickPlace/Pour task with no goal3d uses the final demonstrated center.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .cloud import load_sequence
from .geom import (
    PoseTrajectory,
    WaypointTrajectory,
    load_trajectory,
    resample_trajectory,
    to_object_frame,
)
from .grasp import N_ANCHORS, AnchorGraspSet, generate_anchors
from .posegraph import GraphParams, build_graph, optimize
from .registration import IcpParams, TrackParams, track_sequence
from .simarm import ArmModel, Scene, execute_grasp_trajectory, load_arm
from .taskeval import TaskSpec, TaskKind, evaluate

__all__ = [
    "EpisodeRecord",
    "FilteredDataset",
    "FilterParams",
    "filter_episode",
    "run_dataset",
    "save_dataset",
    "load_dataset",
    "project_point",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class EpisodeRecord:
    episode_id: str
    u: np.ndarray
    task: TaskSpec
    waypoints: WaypointTrajectory | None
    grasp_labels: tuple  # 8 booleans once filtered
    discarded: bool
    goal2d: np.ndarray | None = None
    reason: str = ""

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float).reshape(3)
        u.flags.writeable = False
        object.__setattr__(self, "u", u)
        labels = tuple(bool(b) for b in self.grasp_labels)
        if len(labels) != N_ANCHORS:
            raise ValueError(f"expected {N_ANCHORS} labels, got {len(labels)}")
        object.__setattr__(self, "grasp_labels", labels)
        if self.goal2d is not None:
            g = np.asarray(self.goal2d, dtype=float).reshape(2)
            g.flags.writeable = False
            object.__setattr__(self, "goal2d", g)
        if self.discarded and any(labels):
            raise ValueError("a discarded episode cannot have a successful label")


@dataclass(frozen=True, eq=False)
class FilteredDataset:
    records: tuple
    arm_name: str
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        records = tuple(self.records)
        stats = compute_stats(records)
        if self.stats and self.stats != stats:
            raise ValueError("stats inconsistent with records")
        object.__setattr__(self, "records", records)
        object.__setattr__(self, "stats", stats)

    @property
    def kept(self):
        return [r for r in self.records if not r.discarded]


def compute_stats(records) -> dict:
    anchor = [0] * N_ANCHORS
    discarded = 0
    for r in records:
        discarded += bool(r.discarded)
        for k, lbl in enumerate(r.grasp_labels):
            anchor[k] += bool(lbl)
    return {"total": len(records), "discarded": discarded, "anchor_success": anchor}


@dataclass(frozen=True)
class FilterParams:
    workers: int = 1
    refine: bool = True  # pose-graph refinement during Perceive
    icp: IcpParams = IcpParams()
    track: TrackParams = TrackParams()
    graph: GraphParams = GraphParams()


def project_point(point, camera: dict) -> np.ndarray:
    """Pinhole projection of a frame-c point with {fx, fy, cx, cy}."""
    p = np.asarray(point, dtype=float).reshape(3)
    return np.array(
        [
            camera["fx"] * p[0] / p[2] + camera["cx"],
            camera["fy"] * p[1] / p[2] + camera["cy"],
        ]
    )


def _default_goal(task: TaskSpec, traj: PoseTrajectory, u) -> TaskSpec:
    # filtering measures the demo against itself: absent goals come from the
    # final demonstrated center
    if task.kind in (TaskKind.PICK_PLACE, TaskKind.POUR) and task.goal3d is None:
        final = traj.poses[-1].apply(u)
        return replace(task, goal3d=final)
    return task


def filter_episode(
    traj: PoseTrajectory,
    u,
    task: TaskSpec,
    anchors: AnchorGraspSet,
    arm: ArmModel,
    scene: Scene,
    episode_id: str = "",
    goal2d=None,
) -> EpisodeRecord:
    """Label one episode's 8 anchor grasps by simulation and task check."""
    u = np.asarray(u, dtype=float).reshape(3)
    try:
        rel = to_object_frame(traj, u)
        resampled = resample_trajectory(rel, WaypointTrajectory.N_WAYPOINTS)
        waypoints = WaypointTrajectory(tuple(resampled))
        task = _default_goal(task, traj, u)
    except Exception as exc:
        log.warning("episode %s: degenerate trajectory (%s)", episode_id, exc)
        return EpisodeRecord(
            episode_id=episode_id,
            u=u,
            task=task,
            waypoints=None,
            grasp_labels=(False,) * N_ANCHORS,
            discarded=True,
            goal2d=goal2d,
            reason=f"degenerate: {exc}",
        )

    labels = []
    for k in range(N_ANCHORS):
        result = execute_grasp_trajectory(arm, anchors[k], waypoints, u, scene)
        ok = result.success and evaluate(task, result.realized_traj, u)
        labels.append(bool(ok))
    discarded = not any(labels)
    return EpisodeRecord(
        episode_id=episode_id,
        u=u,
        task=task,
        waypoints=waypoints,
        grasp_labels=tuple(labels),
        discarded=discarded,
        goal2d=goal2d,
        reason="all grasps failed" if discarded else "",
    )


def _perceive(entry: dict, root: Path, params: FilterParams) -> PoseTrajectory:
    seq = load_sequence(root / entry["frames"])
    traj = track_sequence(seq, params.track, params.icp)
    if params.refine:
        graph = build_graph(traj, seq, params.graph, params.icp, workers=1)
        traj = optimize(graph, params.graph)
    return traj


def _episode_record(entry, root, arm, scene, camera, params) -> EpisodeRecord:
    episode_id = entry["episode_id"]
    u = np.asarray(entry["u"], dtype=float).reshape(3)
    task = TaskSpec.from_dict(entry["task"])
    goal2d = np.asarray(entry["goal2d"], dtype=float) if "goal2d" in entry else None
    try:
        if "trajectory" in entry:
            traj = load_trajectory(root / entry["trajectory"])
        elif "frames" in entry:
            traj = _perceive(entry, root, params)
        else:
            raise ValueError("episode needs a 'trajectory' or 'frames' entry")
    except Exception as exc:
        log.warning("episode %s: tracking failed (%s)", episode_id, exc)
        return EpisodeRecord(
            episode_id=episode_id,
            u=u,
            task=task,
            waypoints=None,
            grasp_labels=(False,) * N_ANCHORS,
            discarded=True,
            goal2d=goal2d,
            reason=f"tracking: {exc}",
        )
    if goal2d is None and camera is not None and task.kind is TaskKind.PICK_PLACE:
        goal2d = project_point(traj.poses[-1].apply(u), camera)
    anchors = generate_anchors(u)
    return filter_episode(traj, u, task, anchors, arm, scene, episode_id, goal2d)


def run_dataset(manifest, params: FilterParams = FilterParams(), arm_name: str = None) -> FilteredDataset:
    """Filter every episode in a manifest (path or already-loaded dict).

    Per-episode failures become discarded records; the batch never aborts.
    Output is deterministic and independent of worker count: records are
    sorted by episode id.
    """
    if isinstance(manifest, (str, Path)):
        root = Path(manifest).parent
        with open(manifest) as f:
            manifest = json.load(f)
    else:
        root = Path(manifest.get("root", "."))
    arm = load_arm(arm_name or manifest["arm"])
    scene_doc = manifest.get("scene", {})
    scene = Scene(
        table_height=float(scene_doc.get("table_height", 0.0)),
        workspace_box=scene_doc.get("workspace_box"),
    )
    camera = manifest.get("camera")
    episodes = manifest.get("episodes", [])

    def job(entry):
        return _episode_record(entry, root, arm, scene, camera, params)

    if params.workers > 1 and len(episodes) > 1:
        with ThreadPoolExecutor(max_workers=params.workers) as pool:
            records = list(pool.map(job, episodes))
    else:
        records = [job(e) for e in episodes]
    records.sort(key=lambda r: r.episode_id)
    return FilteredDataset(records=tuple(records), arm_name=arm.name)


# -- persistence ---------------------------------------------------------------


def _record_doc(r: EpisodeRecord) -> dict:
    doc = {
        "episode_id": r.episode_id,
        "u": [float(x) for x in r.u],
        "task": r.task.to_dict(),
        "grasp_labels": list(r.grasp_labels),
        "discarded": r.discarded,
        "reason": r.reason,
    }
    if r.goal2d is not None:
        doc["goal2d"] = [float(x) for x in r.goal2d]
    if r.waypoints is not None:
        doc["waypoints"] = [
            {"rotvec": [float(x) for x in p.rotvec], "trans": [float(x) for x in p.trans]}
            for p in r.waypoints
        ]
    return doc


def save_dataset(dataset: FilteredDataset, path) -> None:
    doc = {
        "arm_name": dataset.arm_name,
        "stats": dataset.stats,
        "records": [_record_doc(r) for r in dataset.records],
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=1, sort_keys=True)
        f.write("\n")


def load_dataset(path) -> FilteredDataset:
    from .geom import Pose

    with open(path) as f:
        doc = json.load(f)
    records = []
    for rd in doc["records"]:
        waypoints = None
        if "waypoints" in rd:
            waypoints = WaypointTrajectory(
                tuple(
                    Pose(np.array(w["rotvec"]), np.array(w["trans"])) for w in rd["waypoints"]
                )
            )
        records.append(
            EpisodeRecord(
                episode_id=rd["episode_id"],
                u=np.array(rd["u"]),
                task=TaskSpec.from_dict(rd["task"]),
                waypoints=waypoints,
                grasp_labels=tuple(rd["grasp_labels"]),
                discarded=rd["discarded"],
                goal2d=np.array(rd["goal2d"]) if "goal2d" in rd else None,
                reason=rd.get("reason", ""),
            )
        )
    return FilteredDataset(records=tuple(records), arm_name=doc["arm_name"])
