"""Command-line entry point: psi <subcommand>.

Subcommands cover the batch pipeline end to end:

    psi track    --manifest M --out DIR            point clouds -> trajectories
    psi filter   --manifest M --out DIR [--arm A]  simulate + label + discard
    psi train    --dataset D --out DIR             two-stage policy training
    psi predict  --model F --u X,Y,Z [--goal2d PX,PY]
    psi select   --model F --u X,Y,Z (--candidates F | --grid N --jitter R --seed S)
    psi eval     --task F --trajectory F --u X,Y,Z

Exit codes: 0 success, 1 task-level failure (all episodes discarded, task
verdict false), 2 usage or input errors.  Set PSI_LOG=debug|info|warning for
logging verbosity.  All outputs are deterministic for a fixed config and
seed, independent of --workers.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import cloud, filterpipe, grasp, imitate, posegraph, registration, taskeval
from .geom import Pose, load_trajectory, save_trajectory

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_TASK_FAILURE = 1
EXIT_USAGE = 2


class InputError(Exception):
    """Malformed input or unusable configuration (exit code 2)."""


def _vec(text: str, n: int) -> np.ndarray:
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != n:
        raise InputError(f"expected {n} comma-separated numbers, got {text!r}")
    try:
        return np.array([float(p) for p in parts])
    except ValueError as exc:
        raise InputError(f"bad number in {text!r}: {exc}") from None


def _pose_doc(p: Pose) -> dict:
    return {"rotvec": [float(x) for x in p.rotvec], "trans": [float(x) for x in p.trans]}


def _write_json(path: Path, doc) -> None:
    with open(path, "w") as f:
        json.dump(doc, f, indent=1, sort_keys=True)
        f.write("\n")


# -- subcommands ----------------------------------------------------------------


def cmd_track(args) -> int:
    manifest_path = Path(args.manifest)
    try:
        with open(manifest_path) as f:
            manifest = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read manifest: {exc}") from None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    root = manifest_path.parent
    params = registration.TrackParams()
    icp = registration.IcpParams()
    gparams = posegraph.GraphParams()

    report = {}
    for entry in manifest.get("episodes", []):
        episode_id = entry.get("episode_id")
        if not episode_id:
            raise InputError("manifest episode missing episode_id")
        if "frames" not in entry:
            report[episode_id] = {"status": "no-frames"}
            continue
        try:
            seq = cloud.load_sequence(root / entry["frames"])
        except Exception as exc:
            raise InputError(f"episode {episode_id}: cannot load frames ({exc})") from None
        try:
            traj = registration.track_sequence(seq, params, icp)
            if not args.no_refine:
                graph = posegraph.build_graph(traj, seq, gparams, icp, workers=args.workers)
                traj = posegraph.optimize(graph, gparams)
            save_trajectory(traj, out / f"{episode_id}.traj.json")
            report[episode_id] = {"status": "ok", "frames": len(seq.frames), "tracked": len(traj)}
        except registration.NoValidFrames as exc:
            report[episode_id] = {"status": "tracking-failed", "error": str(exc)}
    _write_json(out / "track_report.json", report)
    print(f"tracked {sum(1 for r in report.values() if r.get('status') == 'ok')}"
          f"/{len(report)} episodes -> {out}")
    return EXIT_OK


def cmd_filter(args) -> int:
    manifest_path = Path(args.manifest)
    if not manifest_path.is_file():
        raise InputError(f"manifest not found: {manifest_path}")
    try:
        with open(manifest_path) as f:
            manifest_doc = json.load(f)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed manifest: {exc}") from None
    arm_name = args.arm or manifest_doc.get("arm")
    try:
        filterpipe.load_arm(arm_name)
    except Exception as exc:
        raise InputError(f"unknown arm {arm_name!r}: {exc}") from None

    episodes = manifest_doc.get("episodes", [])
    if args.dry_run:
        print(f"plan: {len(episodes)} episodes x {grasp.N_ANCHORS} anchors on arm {arm_name}")
        for e in episodes:
            source = "trajectory" if "trajectory" in e else "frames"
            print(f"  {e.get('episode_id')}: task={e.get('task', {}).get('kind')} via {source}")
        return EXIT_OK

    manifest_doc["root"] = str(manifest_path.parent)
    params = filterpipe.FilterParams(workers=args.workers)
    dataset = filterpipe.run_dataset(manifest_doc, params, arm_name=arm_name)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    filterpipe.save_dataset(dataset, out / "dataset.json")
    _write_json(out / "stats.json", dataset.stats)
    print(
        f"filtered {dataset.stats['total']} episodes, "
        f"discarded {dataset.stats['discarded']} -> {out}"
    )
    if dataset.records and dataset.stats["discarded"] == dataset.stats["total"]:
        print("all episodes discarded")
        return EXIT_TASK_FAILURE
    return EXIT_OK


def cmd_train(args) -> int:
    try:
        dataset = filterpipe.load_dataset(args.dataset)
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        raise InputError(f"cannot load dataset: {exc}") from None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        model = imitate.train_stage1(dataset)
        history: list = []
        model = imitate.train_stage2(model, dataset, loss_history=history)
    except imitate.EmptyDataset:
        print("no usable episodes in dataset")
        return EXIT_TASK_FAILURE
    imitate.save_model(model, out / "model.json")
    report = {
        "episodes": len(dataset.kept),
        "traj_mse": imitate.mean_traj_mse(model, dataset),
        "grasp_bce": imitate.mean_grasp_bce(model, dataset),
        "stage2_first_loss": history[0] if history else None,
        "stage2_final_loss": history[-1] if history else None,
    }
    _write_json(out / "train_report.json", report)
    print(f"trained on {report['episodes']} episodes -> {out / 'model.json'}")
    return EXIT_OK


def _load_model_arg(path) -> imitate.PolicyModel:
    try:
        return imitate.load_model(path)
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        raise InputError(f"cannot load model: {exc}") from None


def cmd_predict(args) -> int:
    model = _load_model_arg(args.model)
    u = _vec(args.u, 3)
    goal2d = _vec(args.goal2d, 2) if args.goal2d else None
    try:
        waypoints, scores = imitate.predict(model, imitate.FeatureVector(u, goal2d))
    except imitate.Untrained as exc:
        raise InputError(str(exc)) from None
    doc = {
        "waypoints": [_pose_doc(p) for p in waypoints],
        "scores": [float(s) for s in scores.scores],
    }
    if args.json:
        print(json.dumps(doc, indent=1, sort_keys=True))
    else:
        print("scores:", " ".join(f"{s:.3f}" for s in scores.scores))
        for i, p in enumerate(waypoints):
            print(f"wp{i:02d} rotvec={np.round(p.rotvec, 4)} trans={np.round(p.trans, 4)}")
    return EXIT_OK


def cmd_select(args) -> int:
    model = _load_model_arg(args.model)
    u = _vec(args.u, 3)
    goal2d = _vec(args.goal2d, 2) if args.goal2d else None
    if args.candidates:
        try:
            candidates = grasp.load_candidates(args.candidates)
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            raise InputError(f"cannot load candidates: {exc}") from None
    else:
        if args.seed is None:
            raise InputError("--grid requires --seed")
        candidates = grasp.generate_candidates_grid(u, args.grid, args.jitter, args.seed)
    try:
        _, scores = imitate.predict(model, imitate.FeatureVector(u, goal2d))
    except imitate.Untrained as exc:
        raise InputError(str(exc)) from None
    anchors = grasp.generate_anchors(u)
    try:
        chosen = grasp.select_grasp(candidates, scores, anchors)
    except grasp.EmptyCandidates as exc:
        raise InputError(str(exc)) from None
    k = grasp.assign_candidate(chosen, anchors)
    doc = {
        "pose": _pose_doc(chosen.pose),
        "provenance": chosen.provenance,
        "anchor": k,
        "score": scores[k],
    }
    if args.json:
        print(json.dumps(doc, indent=1, sort_keys=True))
    else:
        print(f"selected {chosen.provenance or 'candidate'} (anchor {k}, score {scores[k]:.3f})")
        print(f"rotvec={np.round(chosen.pose.rotvec, 6)} trans={np.round(chosen.pose.trans, 6)}")
    return EXIT_OK


def cmd_eval(args) -> int:
    try:
        with open(args.task) as f:
            task = taskeval.TaskSpec.from_dict(json.load(f))
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        raise InputError(f"cannot load task spec: {exc}") from None
    try:
        traj = load_trajectory(args.trajectory)
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        raise InputError(f"cannot load trajectory: {exc}") from None
    u = _vec(args.u, 3)
    try:
        ok = taskeval.evaluate(task, traj, u)
    except taskeval.MissingField as exc:
        raise InputError(str(exc)) from None
    if args.json:
        print(json.dumps({"task": task.kind.value, "success": bool(ok)}, sort_keys=True))
    else:
        print(f"{task.kind.value}: {'success' if ok else 'failure'}")
    return EXIT_OK if ok else EXIT_TASK_FAILURE


# -- argument parsing -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="psi", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("track", help="track object poses from point-cloud sequences")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--no-refine", action="store_true", help="skip pose-graph refinement")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("filter", help="simulate grasps and label/discard episodes")
    p.add_argument("--manifest", required=True)
    p.add_argument("--arm", default=None, help="override the manifest's arm name")
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--dry-run", action="store_true")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("train", help="train the two-stage policy on a filtered dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None, help="unused; training is deterministic")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict waypoints and grasp scores")
    p.add_argument("--model", required=True)
    p.add_argument("--u", required=True, help="object center X,Y,Z (meters)")
    p.add_argument("--goal2d", default=None, help="goal pixel PX,PY")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("select", help="select the best candidate grasp under the model")
    p.add_argument("--model", required=True)
    p.add_argument("--u", required=True)
    p.add_argument("--goal2d", default=None)
    p.add_argument("--candidates", default=None, help="candidate list file")
    p.add_argument("--grid", type=int, default=None, help="generate N candidates per anchor")
    p.add_argument("--jitter", type=float, default=0.1, help="grid jitter magnitude (rad)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("eval", help="evaluate a task on a stored trajectory")
    p.add_argument("--task", required=True, help="task spec JSON file")
    p.add_argument("--trajectory", required=True, help="trajectory JSON file")
    p.add_argument("--u", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv=None) -> int:
    level = os.environ.get("PSI_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "select" and not args.candidates and args.grid is None:
        parser.error("select needs --candidates or --grid")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
