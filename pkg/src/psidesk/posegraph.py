"""Pose-graph construction and Levenberg-Marquardt refinement on SE(3).

Nodes are absolute poses; edges carry relative measurements (pose of node j
expressed in node i) with a 6x6 information weight.  Sequential edges come
from tracking; longer-stride edges come from re-registering frame pairs and
act as loop-closure-style constraints.

The optimizer minimizes

    sum over valid edges of  huber( || log(meas^-1 (Ni^-1 Nj)) ||^2_W )

with node 0 held fixed (gauge).  Perturbations are left-multiplicative on
the SE(3) tangent space, ordered (rotation, translation); Jacobians are
numeric central differences.
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cloud import FrameSequence
from .geom import Pose, PoseTrajectory, compose, inverse, matrix_to_rotvec
from .registration import IcpParams, icp_register

__all__ = [
    "PoseGraph",
    "GraphEdge",
    "GraphParams",
    "NotConnected",
    "Diverged",
    "build_graph",
    "optimize",
    "dump_graph",
]

log = logging.getLogger(__name__)

# Stride edges below this inlier fraction are kept in the graph but excluded
# from optimization.
_MIN_EDGE_FITNESS = 0.3

_FD_STEP = 1e-6


class NotConnected(RuntimeError):
    """Valid sequential edges do not connect all nodes."""


class Diverged(UserWarning):
    """LM failed to reduce the robust cost; input returned unchanged."""


@dataclass(frozen=True)
class GraphParams:
    strides: tuple = (32, 64)
    huber_delta: float = 0.1
    max_iters: int = 100
    lm_lambda0: float = 1e-4

    def __post_init__(self):
        s = tuple(int(x) for x in self.strides)
        if any(x <= 0 for x in s) or list(s) != sorted(s):
            raise ValueError("strides must be positive and sorted")
        object.__setattr__(self, "strides", s)


@dataclass(frozen=True, eq=False)
class GraphEdge:
    i: int
    j: int
    measured: Pose  # pose of node j expressed in node i
    weight: np.ndarray  # 6x6 information
    valid: bool = True

    def __post_init__(self):
        if not (0 <= self.i < self.j):
            raise ValueError(f"edge requires 0 <= i < j, got ({self.i}, {self.j})")
        w = np.asarray(self.weight, dtype=float).reshape(6, 6)
        w.flags.writeable = False
        object.__setattr__(self, "weight", w)


@dataclass(frozen=True, eq=False)
class PoseGraph:
    nodes: tuple  # of Pose (absolute, source frame)
    edges: tuple  # of GraphEdge
    frame_id: str = "frame"
    frame_indices: tuple = ()  # aligns nodes with original frame indices

    def __post_init__(self):
        nodes = tuple(self.nodes)
        edges = tuple(self.edges)
        for e in edges:
            if e.j >= len(nodes):
                raise ValueError(f"edge ({e.i}, {e.j}) out of range for {len(nodes)} nodes")
        idx = tuple(self.frame_indices) or tuple(range(len(nodes)))
        if len(idx) != len(nodes):
            raise ValueError("frame_indices must match node count")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "frame_indices", idx)


# -- SE(3) exp/log on (rotation, translation) tangent coordinates ------------


def _skew(v):
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def _se3_exp(xi: np.ndarray) -> np.ndarray:
    """Tangent (w, v) -> 4x4 transform."""
    w, v = xi[:3], xi[3:]
    theta = float(np.linalg.norm(w))
    k = _skew(w)
    if theta < 1e-10:
        r = np.eye(3) + k + 0.5 * (k @ k)
        jl = np.eye(3) + 0.5 * k + (k @ k) / 6.0
    else:
        k2 = k @ k
        r = np.eye(3) + math.sin(theta) / theta * k + (1.0 - math.cos(theta)) / theta**2 * k2
        jl = (
            np.eye(3)
            + (1.0 - math.cos(theta)) / theta**2 * k
            + (theta - math.sin(theta)) / theta**3 * k2
        )
    m = np.eye(4)
    m[:3, :3] = r
    m[:3, 3] = jl @ v
    return m


def _se3_log(m: np.ndarray) -> np.ndarray:
    """4x4 transform -> tangent (w, v)."""
    w = matrix_to_rotvec(m[:3, :3])
    theta = float(np.linalg.norm(w))
    k = _skew(w)
    if theta < 1e-10:
        jl_inv = np.eye(3) - 0.5 * k + (k @ k) / 12.0
    else:
        half = 0.5 * theta
        coef = (1.0 - half * math.cos(half) / math.sin(half)) / theta**2
        jl_inv = np.eye(3) - 0.5 * k + coef * (k @ k)
    return np.concatenate([w, jl_inv @ m[:3, 3]])


def _pose_to_mat(p: Pose) -> np.ndarray:
    return p.matrix()


def _mat_to_pose(m: np.ndarray) -> Pose:
    return Pose(matrix_to_rotvec(m[:3, :3]), m[:3, 3])


def _huber(s: float, delta: float) -> tuple:
    """Robust kernel on the squared norm; returns (rho, drho/ds)."""
    if s <= delta * delta:
        return s, 1.0
    rs = math.sqrt(s)
    return 2.0 * delta * rs - delta * delta, delta / rs


# -- graph construction -------------------------------------------------------


def _register_edge(args):
    i, j, src, dst, init, icp = args
    try:
        pose, fitness, rmse = icp_register(src, dst, init, icp)
        return i, j, pose, fitness, rmse, None
    except Exception as exc:  # recorded as an invalid edge, never fatal
        return i, j, None, 0.0, float("inf"), exc


def build_graph(
    traj: PoseTrajectory,
    seq: FrameSequence,
    params: GraphParams = GraphParams(),
    icp: IcpParams = IcpParams(),
    workers: int = 1,
) -> PoseGraph:
    """Build a pose graph from a tracked trajectory and its frame sequence.

    Sequential edges take their measurement from the tracked poses.  For each
    stride s, frames (i, i+s) are re-registered with the tracked relative
    pose as the initial estimate; edges with fitness below 0.3 (or failed
    registrations) are marked invalid but kept for diagnostics.
    """
    nodes = traj.poses
    indices = traj.indices
    clouds = dict(seq.frames)
    n = len(nodes)

    edges = []
    for k in range(n - 1):
        measured = compose(inverse(nodes[k]), nodes[k + 1])
        edges.append(GraphEdge(k, k + 1, measured, np.eye(6), True))

    jobs = []
    for s in params.strides:
        for i in range(n - s):
            j = i + s
            fi, fj = indices[i], indices[j]
            if fi not in clouds or fj not in clouds:
                continue
            # world-frame delta implied by the tracked poses, used as init
            init = compose(nodes[j], inverse(nodes[i]))
            jobs.append((i, j, clouds[fi], clouds[fj], init, icp))

    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_register_edge, jobs))
    else:
        results = [_register_edge(a) for a in jobs]

    for i, j, world_delta, fitness, rmse, exc in results:
        if exc is not None:
            log.warning("edge (%d, %d): registration failed (%s)", i, j, exc)
            measured = compose(inverse(nodes[i]), nodes[j])
            edges.append(GraphEdge(i, j, measured, np.zeros((6, 6)), False))
            continue
        # convert the world-frame delta to the j-in-i convention at the
        # current node estimates
        measured = compose(inverse(nodes[i]), compose(world_delta, nodes[i]))
        valid = fitness >= _MIN_EDGE_FITNESS
        if not valid:
            log.debug("edge (%d, %d): fitness %.3f below %.2f", i, j, fitness, _MIN_EDGE_FITNESS)
        edges.append(GraphEdge(i, j, measured, fitness * np.eye(6), valid))

    return PoseGraph(
        nodes=tuple(nodes),
        edges=tuple(edges),
        frame_id=traj.frame_id,
        frame_indices=tuple(indices),
    )


# -- optimization --------------------------------------------------------------


def _edge_residual(mats, meas_inv, i, j):
    return _se3_log(meas_inv @ np.linalg.inv(mats[i]) @ mats[j])


def _total_cost(mats, edges, delta):
    cost = 0.0
    for meas_inv, i, j, w in edges:
        r = _edge_residual(mats, meas_inv, i, j)
        rho, _ = _huber(float(r @ w @ r), delta)
        cost += rho
    return cost


def optimize(graph: PoseGraph, params: GraphParams = GraphParams()) -> PoseTrajectory:
    """Refine node poses by robust Levenberg-Marquardt.

    Node 0 is held fixed.  Accepted steps are monotone in the robust cost;
    lambda is multiplied by 10 on a rejected step and halved on an accepted
    one.  If no step reduces the cost within max_iters, the input trajectory
    is returned unchanged with a Diverged warning.

    Raises:
        NotConnected: valid sequential edges do not span all nodes.
    """
    n = len(graph.nodes)
    seq_valid = {(e.i, e.j) for e in graph.edges if e.valid and e.j == e.i + 1}
    if any((k, k + 1) not in seq_valid for k in range(n - 1)):
        raise NotConnected("every consecutive node pair needs a valid sequential edge")

    mats = [_pose_to_mat(p) for p in graph.nodes]
    edges = [
        (np.linalg.inv(_pose_to_mat(e.measured)), e.i, e.j, e.weight)
        for e in graph.edges
        if e.valid
    ]

    def traj_from(mats_):
        entries = tuple(
            (idx, _mat_to_pose(m)) for idx, m in zip(graph.frame_indices, mats_)
        )
        return PoseTrajectory(frame_id=graph.frame_id, entries=entries)

    initial_cost = _total_cost(mats, edges, params.huber_delta)
    if initial_cost == 0.0:
        return traj_from(mats)

    nvar = 6 * (n - 1)  # node 0 excluded (gauge)
    lam = params.lm_lambda0
    cost = initial_cost
    accepted_any = False
    at_stationary_point = False

    for _ in range(params.max_iters):
        h = np.zeros((nvar, nvar))
        g = np.zeros(nvar)
        for meas_inv, i, j, w in edges:
            r0 = _edge_residual(mats, meas_inv, i, j)
            _, drho = _huber(float(r0 @ w @ r0), params.huber_delta)
            jac_blocks = []
            for node in (i, j):
                if node == 0:
                    jac_blocks.append(None)
                    continue
                jb = np.empty((6, 6))
                base = mats[node]
                for c in range(6):
                    xi = np.zeros(6)
                    xi[c] = _FD_STEP
                    mats[node] = _se3_exp(xi) @ base
                    rp = _edge_residual(mats, meas_inv, i, j)
                    mats[node] = _se3_exp(-xi) @ base
                    rm = _edge_residual(mats, meas_inv, i, j)
                    jb[:, c] = (rp - rm) / (2.0 * _FD_STEP)
                mats[node] = base
                jac_blocks.append(jb)
            for node, jb in zip((i, j), jac_blocks):
                if jb is None:
                    continue
                a = 6 * (node - 1)
                g[a : a + 6] += drho * (jb.T @ w @ r0)
                for other, jo in zip((i, j), jac_blocks):
                    if jo is None:
                        continue
                    b = 6 * (other - 1)
                    h[a : a + 6, b : b + 6] += drho * (jb.T @ w @ jo)

        if float(np.max(np.abs(g))) < 1e-14:
            at_stationary_point = True
            break

        stepped = False
        while lam < 1e12:
            damped = h + lam * np.diag(np.clip(np.diag(h), 1e-12, None))
            try:
                dx = np.linalg.solve(damped, -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            trial = list(mats)
            for node in range(1, n):
                xi = dx[6 * (node - 1) : 6 * node]
                trial[node] = _se3_exp(xi) @ mats[node]
            trial_cost = _total_cost(trial, edges, params.huber_delta)
            if trial_cost < cost:
                mats = trial
                cost = trial_cost
                lam = max(lam * 0.5, 1e-12)
                accepted_any = True
                stepped = True
                break
            lam *= 10.0
        if not stepped:
            break
        if float(np.linalg.norm(dx)) < 1e-12:
            break

    if not accepted_any and not at_stationary_point and initial_cost > 0.0:
        warnings.warn(
            f"pose-graph optimization made no progress (cost {initial_cost:.3e})",
            Diverged,
            stacklevel=2,
        )
        return traj_from([_pose_to_mat(p) for p in graph.nodes])

    log.info("pose graph: cost %.6e -> %.6e over %d edges", initial_cost, cost, len(edges))
    return traj_from(mats)


def dump_graph(graph: PoseGraph, path=None):
    """Diagnostic dump of nodes, edges, and current residuals (JSON text)."""
    mats = [_pose_to_mat(p) for p in graph.nodes]
    doc = {
        "frame_id": graph.frame_id,
        "nodes": [
            {"index": idx, "rotvec": list(map(float, p.rotvec)), "trans": list(map(float, p.trans))}
            for idx, p in zip(graph.frame_indices, graph.nodes)
        ],
        "edges": [],
    }
    for e in graph.edges:
        r = _se3_log(np.linalg.inv(_pose_to_mat(e.measured)) @ np.linalg.inv(mats[e.i]) @ mats[e.j])
        doc["edges"].append(
            {
                "i": e.i,
                "j": e.j,
                "valid": e.valid,
                "measured": {
                    "rotvec": list(map(float, e.measured.rotvec)),
                    "trans": list(map(float, e.measured.trans)),
                },
                "weight_scale": float(e.weight[0, 0]),
                "residual": [float(x) for x in r],
            }
        )
    text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
    if path is not None:
        with open(path, "w") as f:
            f.write(text)
    return text
