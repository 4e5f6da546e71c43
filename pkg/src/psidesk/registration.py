"""Pairwise rigid registration and sequential pose tracking.

Registration is point-to-plane ICP run in two passes: a coarse
correspondence distance to pull the clouds into alignment, then a fine
distance for refinement.  Target normals come from 20-NN PCA; both clouds
are voxel-downsampled internally before matching.

Tracking applies registration between consecutive usable frames, skipping
frames with too few points (pose carried forward) and rejecting per-step
transforms that jump farther than a threshold at the object center
(replaced by the previous accepted step).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .cloud import FrameSequence, PointCloud, object_center
from .geom import Pose, PoseTrajectory, compose, inverse, rotvec_to_matrix

__all__ = [
    "IcpParams",
    "TrackParams",
    "InsufficientPoints",
    "NoCorrespondences",
    "NoValidFrames",
    "icp_register",
    "track_sequence",
]

log = logging.getLogger(__name__)

_VOXEL_SIZE = 0.005
_NORMAL_K = 20
_MIN_POINTS_ICP = 10


class InsufficientPoints(ValueError):
    """A cloud has too few points for registration."""


class NoCorrespondences(RuntimeError):
    """No point pairs within the coarse distance under the initial pose."""


class NoValidFrames(RuntimeError):
    """Sequence has fewer than two frames meeting the point threshold."""


@dataclass(frozen=True)
class IcpParams:
    coarse_dist: float = 0.08
    fine_dist: float = 0.02
    max_iters: int = 50
    convergence_eps: float = 1e-7

    def __post_init__(self):
        if not (self.coarse_dist >= self.fine_dist > 0.0):
            raise ValueError("require coarse_dist >= fine_dist > 0")


@dataclass(frozen=True)
class TrackParams:
    min_points: int = 500
    max_jump_trans: float = 0.02
    max_jump_rot: float = 0.2

    def __post_init__(self):
        if self.min_points <= 0 or self.max_jump_trans <= 0 or self.max_jump_rot <= 0:
            raise ValueError("all tracking parameters must be positive")


def _voxel_downsample(points: np.ndarray, voxel: float) -> np.ndarray:
    """Keep one representative point per occupied voxel (deterministic)."""
    if points.shape[0] == 0:
        return points
    keys = np.floor(points / voxel).astype(np.int64)
    _, first = np.unique(keys, axis=0, return_index=True)
    return points[np.sort(first)]

def _estimate_normals(points: np.ndarray, k: int = _NORMAL_K) -> np.ndarray:
    """Per-point normals from k-NN PCA (smallest-eigenvalue direction)."""
    n = points.shape[0]
    k = min(k, n)
    tree = cKDTree(points)
    _, idx = tree.query(points, k=k)
    if k == 1:
        idx = idx[:, None]
    nbrs = points[idx]  # (n, k, 3)
    centered = nbrs - nbrs.mean(axis=1, keepdims=True)
    cov = np.einsum("nki,nkj->nij", centered, centered)
    _, vecs = np.linalg.eigh(cov)
    return vecs[:, :, 0]


def _point_to_plane_step(src: np.ndarray, dst: np.ndarray, normals: np.ndarray) -> np.ndarray:
    """One linearized point-to-plane solve; returns a 6-vector (w, v).

    Minimizes sum ((R p + t - q) . n)^2 with R ~ I + [w]x, giving rows
    [p x n, n] . [w, v] = -(p - q) . n.
    """
    cxn = np.cross(src, normals)
    a = np.hstack([cxn, normals])
    b = -np.einsum("ij,ij->i", src - dst, normals)
    sol, *_ = np.linalg.lstsq(a, b, rcond=None)
    return sol


def _apply_increment(pose: Pose, xi: np.ndarray) -> Pose:
    inc = Pose(xi[:3], xi[3:])
    return compose(inc, pose)


def _icp_pass(
    src: np.ndarray,
    dst_tree: cKDTree,
    dst: np.ndarray,
    normals: np.ndarray,
    init: Pose,
    max_corr: float,
    params: IcpParams,
) -> Pose:
    pose = init
    prev_err = None
    for _ in range(params.max_iters):
        moved = pose.apply(src)
        dists, nn = dst_tree.query(moved, distance_upper_bound=max_corr)
        mask = np.isfinite(dists)
        if not np.any(mask):
            raise NoCorrespondences(
                f"no correspondences within {max_corr} m under the current estimate"
            )
        xi = _point_to_plane_step(moved[mask], dst[nn[mask]], normals[nn[mask]])
        pose = _apply_increment(pose, xi)
        err = float(np.mean(dists[mask] ** 2))
        if prev_err is not None and abs(prev_err - err) <= params.convergence_eps * max(prev_err, 1e-30):
            break
        if float(np.linalg.norm(xi)) < 1e-12:
            break
        prev_err = err
    return pose


def icp_register(
    src: PointCloud,
    dst: PointCloud,
    init: Pose = None,
    params: IcpParams = IcpParams(),
) -> tuple:
    """Point-to-plane ICP, coarse pass then fine pass.

    Returns (pose, fitness, rmse) where ``pose`` maps src points onto dst,
    ``fitness`` is the fraction of (downsampled) src points with a dst
    neighbor within fine_dist under the final pose, and ``rmse`` is the RMS
    distance over those inliers.

    Raises:
        InsufficientPoints: fewer than 10 points after downsampling.
        NoCorrespondences: zero pairs within coarse_dist under ``init``.
    """
    if init is None:
        init = Pose.identity()
    s = _voxel_downsample(src.points, _VOXEL_SIZE)
    d = _voxel_downsample(dst.points, _VOXEL_SIZE)
    if s.shape[0] < _MIN_POINTS_ICP or d.shape[0] < _MIN_POINTS_ICP:
        raise InsufficientPoints(
            f"{s.shape[0]} src / {d.shape[0]} dst points after downsampling"
        )
    normals = _estimate_normals(d)
    tree = cKDTree(d)

    # Fail fast if the initial estimate puts the clouds out of coarse range.
    d0, _ = tree.query(init.apply(s), distance_upper_bound=params.coarse_dist)
    if not np.any(np.isfinite(d0)):
        raise NoCorrespondences(
            f"no correspondences within coarse_dist={params.coarse_dist} m under init"
        )

    pose = _icp_pass(s, tree, d, normals, init, params.coarse_dist, params)
    pose = _icp_pass(s, tree, d, normals, pose, params.fine_dist, params)

    dists, _ = tree.query(pose.apply(s), distance_upper_bound=params.fine_dist)
    inliers = np.isfinite(dists)
    fitness = float(np.count_nonzero(inliers)) / s.shape[0]
    rmse = float(np.sqrt(np.mean(dists[inliers] ** 2))) if np.any(inliers) else float("inf")
    return pose, fitness, rmse


def _jump_exceeded(delta: Pose, center: np.ndarray, params: TrackParams) -> bool:
    """Per-step delta moves the object center or rotates beyond the limits."""
    moved = delta.apply(center)
    trans = float(np.linalg.norm(moved - center))
    rot = float(np.linalg.norm(delta.rotvec))
    return trans > params.max_jump_trans or rot > params.max_jump_rot


def track_sequence(
    seq: FrameSequence,
    params: TrackParams = TrackParams(),
    icp: IcpParams = IcpParams(),
) -> PoseTrajectory:
    """Track object pose across a frame sequence.

    Frames with fewer than ``params.min_points`` points are skipped and the
    previous pose is carried forward.  A pairwise step whose object-center
    translation exceeds ``max_jump_trans`` or whose rotation magnitude
    exceeds ``max_jump_rot`` is treated as erroneous and replaced by the
    previous accepted step's transform.

    Output poses are relative to the first valid frame, one per input frame.

    Raises:
        NoValidFrames: fewer than two frames meet the point threshold.
    """
    valid = [k for k, (_, c) in enumerate(seq.frames) if c.size >= params.min_points]
    if len(valid) < 2:
        raise NoValidFrames(
            f"{len(valid)} frame(s) with >= {params.min_points} points; need 2"
        )

    entries = []
    pose = Pose.identity()
    prev_step = Pose.identity()  # constant-velocity prior
    last_valid = None
    for k, (frame_index, cloud) in enumerate(seq.frames):
        if cloud.size < params.min_points:
            log.debug("frame %d: %d points, skipped", frame_index, cloud.size)
            entries.append((frame_index, pose))
            continue
        if last_valid is None:
            last_valid = (frame_index, cloud)
            entries.append((frame_index, pose))
            continue
        src_cloud = last_valid[1]
        try:
            delta, fitness, rmse = icp_register(src_cloud, cloud, prev_step, icp)
        except (InsufficientPoints, NoCorrespondences) as exc:
            log.warning("frame %d: registration failed (%s); step rejected", frame_index, exc)
            delta = prev_step
        else:
            center = object_center(src_cloud)
            if _jump_exceeded(delta, center, params):
                log.debug(
                    "frame %d: jump rejected (fitness %.3f rmse %.4f)",
                    frame_index, fitness, rmse,
                )
                delta = prev_step
        pose = compose(delta, pose)
        prev_step = delta
        last_valid = (frame_index, cloud)
        entries.append((frame_index, pose))

    return PoseTrajectory(frame_id=seq.frame_id, entries=tuple(entries))
