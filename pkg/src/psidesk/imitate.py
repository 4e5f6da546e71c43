"""Two-stage featurized policy: 16 relative waypoints + 8 grasp scores.

A deliberately small stand-in for an image-conditioned policy: features are
the object center u, an optional 2D goal point in pixels (zero-filled when
absent), and a bias term.  The trajectory head is linear (ridge regression,
closed form); the grasp head is 8 independent logistic units.

Training follows the two-stage schedule: stage 1 fits the trajectory head
only; stage 2 trains the grasp head by full-batch gradient descent on the
mean binary cross-entropy over (episode, anchor) pairs, at learning rate
1e-4, or 1e-5 with the trajectory head frozen bit-exactly when the dataset
is small (fewer than 100 kept episodes).  Large-data stage 2 may jointly
re-fit the trajectory head each epoch; the reported joint loss weights the
grasp term by grasp_loss_weight.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np

from .filterpipe import FilteredDataset
from .geom import Pose, WaypointTrajectory
from .grasp import N_ANCHORS, GraspScores

__all__ = [
    "FeatureVector",
    "PolicyModel",
    "EmptyDataset",
    "StageOrder",
    "Untrained",
    "FEATURE_DIM",
    "TRAJ_DIM",
    "SMALL_DATA_THRESHOLD",
    "features_from_record",
    "train_stage1",
    "train_stage2",
    "predict",
    "mean_traj_mse",
    "mean_grasp_bce",
    "save_model",
    "load_model",
]

log = logging.getLogger(__name__)

FEATURE_DIM = 6  # u (3) + goal2d (2) + bias
TRAJ_DIM = WaypointTrajectory.N_WAYPOINTS * 6  # rotvec + trans per waypoint

SMALL_DATA_THRESHOLD = 100

_RIDGE_LAMBDA = 1e-6
_STAGE2_LR = 1e-4
_STAGE2_EPOCHS = 500


class EmptyDataset(ValueError):
    """No non-discarded episodes to train on."""


class StageOrder(RuntimeError):
    """Stage 2 requires a stage-1-trained model."""


class Untrained(RuntimeError):
    """Prediction requires a trained model."""


@dataclass(frozen=True, eq=False)
class FeatureVector:
    u: np.ndarray
    goal2d: np.ndarray | None = None

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float).reshape(3)
        object.__setattr__(self, "u", u)
        if self.goal2d is not None:
            object.__setattr__(self, "goal2d", np.asarray(self.goal2d, dtype=float).reshape(2))
        if not np.all(np.isfinite(self.vector)):
            raise ValueError("features must be finite")

    @property
    def vector(self) -> np.ndarray:
        g = self.goal2d if self.goal2d is not None else np.zeros(2)
        return np.concatenate([self.u, g, [1.0]])


@dataclass(frozen=True, eq=False)
class PolicyModel:
    traj_weights: np.ndarray  # (FEATURE_DIM, TRAJ_DIM)
    grasp_weights: np.ndarray  # (N_ANCHORS, FEATURE_DIM)
    trained_stages: frozenset = frozenset()

    def __post_init__(self):
        tw = np.asarray(self.traj_weights, dtype=float).reshape(FEATURE_DIM, TRAJ_DIM)
        gw = np.asarray(self.grasp_weights, dtype=float).reshape(N_ANCHORS, FEATURE_DIM)
        tw.flags.writeable = False
        gw.flags.writeable = False
        object.__setattr__(self, "traj_weights", tw)
        object.__setattr__(self, "grasp_weights", gw)
        object.__setattr__(self, "trained_stages", frozenset(self.trained_stages))

    @classmethod
    def empty(cls) -> "PolicyModel":
        return cls(np.zeros((FEATURE_DIM, TRAJ_DIM)), np.zeros((N_ANCHORS, FEATURE_DIM)))


def features_from_record(record) -> np.ndarray:
    return FeatureVector(record.u, record.goal2d).vector


def _training_matrices(dataset: FilteredDataset):
    kept = dataset.kept
    if not kept:
        raise EmptyDataset("dataset has no non-discarded episodes")
    x = np.stack([features_from_record(r) for r in kept])
    y = np.empty((len(kept), TRAJ_DIM))
    labels = np.empty((len(kept), N_ANCHORS))
    for i, r in enumerate(kept):
        y[i] = np.concatenate([np.concatenate([p.rotvec, p.trans]) for p in r.waypoints])
        labels[i] = [float(b) for b in r.grasp_labels]
    return x, y, labels


def _fit_traj(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    gram = x.T @ x + _RIDGE_LAMBDA * np.eye(FEATURE_DIM)
    return np.linalg.solve(gram, x.T @ y)


def train_stage1(dataset: FilteredDataset) -> PolicyModel:
    """Closed-form ridge fit of the trajectory head.

    Raises:
        EmptyDataset: nothing to train on.
    """
    x, y, _ = _training_matrices(dataset)
    tw = _fit_traj(x, y)
    mse = float(np.mean((x @ tw - y) ** 2))
    log.info("stage 1: %d episodes, trajectory MSE %.3e", x.shape[0], mse)
    return PolicyModel(tw, np.zeros((N_ANCHORS, FEATURE_DIM)), frozenset({"traj"}))


def _bce(logits: np.ndarray, labels: np.ndarray) -> float:
    # numerically stable: softplus(z) - y*z
    return float(np.mean(np.logaddexp(0.0, logits) - labels * logits))


def train_stage2(
    model: PolicyModel,
    dataset: FilteredDataset,
    small_data: bool | None = None,
    epochs: int = _STAGE2_EPOCHS,
    grasp_loss_weight: float = 0.01,
    loss_history: list | None = None,
) -> PolicyModel:
    """Full-batch gradient descent on the grasp head's mean BCE.

    small_data=None decides automatically (< 100 kept episodes).  Small-data
    training freezes the trajectory head bit-exactly and scales the learning
    rate by 0.1; otherwise the trajectory head is re-fit each epoch (joint
    objective, reported as L_traj + grasp_loss_weight * L_grasp).

    Raises:
        StageOrder: stage 1 has not been run.
    """
    if "traj" not in model.trained_stages:
        raise StageOrder("run train_stage1 first")
    x, y, labels = _training_matrices(dataset)
    if small_data is None:
        small_data = x.shape[0] < SMALL_DATA_THRESHOLD
    lr = _STAGE2_LR * (0.1 if small_data else 1.0)
    gw = model.grasp_weights.copy()
    tw = model.traj_weights
    n_pairs = labels.size
    for _ in range(epochs):
        if not small_data:
            tw = _fit_traj(x, y)  # unchanged inputs, but re-fit per the schedule
        logits = x @ gw.T
        sig = 1.0 / (1.0 + np.exp(-logits))
        grad = (sig - labels).T @ x / n_pairs
        gw = gw - lr * grad
        if loss_history is not None:
            bce = _bce(x @ gw.T, labels)
            if small_data:
                loss_history.append(bce)
            else:
                traj_mse = float(np.mean((x @ tw - y) ** 2))
                loss_history.append(traj_mse + grasp_loss_weight * bce)
    final = _bce(x @ gw.T, labels)
    log.info("stage 2: %d pairs, lr %.1e, final BCE %.4f", n_pairs, lr, final)
    return PolicyModel(tw, gw, model.trained_stages | {"grasp"})


def predict(model: PolicyModel, features) -> tuple:
    """(WaypointTrajectory, GraspScores) for a feature vector.

    Waypoint 0 is forced to the identity; scores are sigmoid outputs.

    Raises:
        Untrained: model has not completed stage 1.
    """
    if "traj" not in model.trained_stages:
        raise Untrained("model has no trained trajectory head")
    if isinstance(features, FeatureVector):
        features = features.vector
    x = np.asarray(features, dtype=float).reshape(FEATURE_DIM)
    flat = x @ model.traj_weights
    poses = [Pose.identity()]
    for i in range(1, WaypointTrajectory.N_WAYPOINTS):
        chunk = flat[6 * i : 6 * i + 6]
        poses.append(Pose(chunk[:3], chunk[3:]))
    logits = model.grasp_weights @ x
    scores = 1.0 / (1.0 + np.exp(-logits))
    return WaypointTrajectory(tuple(poses)), GraspScores(scores)


def mean_traj_mse(model: PolicyModel, dataset: FilteredDataset) -> float:
    x, y, _ = _training_matrices(dataset)
    return float(np.mean((x @ model.traj_weights - y) ** 2))


def mean_grasp_bce(model: PolicyModel, dataset: FilteredDataset) -> float:
    x, _, labels = _training_matrices(dataset)
    return _bce(x @ model.grasp_weights.T, labels)


def save_model(model: PolicyModel, path) -> None:
    doc = {
        "version": 1,
        "feature_dim": FEATURE_DIM,
        "traj_weights": [[float(v) for v in row] for row in model.traj_weights],
        "grasp_weights": [[float(v) for v in row] for row in model.grasp_weights],
        "trained_stages": sorted(model.trained_stages),
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=1, sort_keys=True)
        f.write("\n")


def load_model(path) -> PolicyModel:
    with open(path) as f:
        doc = json.load(f)
    if doc.get("version") != 1:
        raise ValueError(f"unsupported model version {doc.get('version')!r}")
    return PolicyModel(
        np.array(doc["traj_weights"]),
        np.array(doc["grasp_weights"]),
        frozenset(doc["trained_stages"]),
    )
