"""Point-cloud ingestion, outlier removal, and robust object centers.

Clouds arrive already masked to the object of interest (any image-space
masking happens upstream); this module works purely on 3D points in the
source frame.
"""

from __future__ import annotations

import json
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

__all__ = [
    "PointCloud",
    "FrameSequence",
    "EmptyCloud",
    "TooFewPoints",
    "MalformedHeader",
    "TruncatedPayload",
    "remove_outliers",
    "object_center",
    "load_pcbin",
    "save_pcbin",
    "save_sequence",
    "load_sequence",
]

_MAGIC = b"PCB1"


class EmptyCloud(ValueError):
    """Operation requires at least one point."""


class TooFewPoints(UserWarning):
    """Cloud too small for statistical outlier removal; returned unchanged."""


class MalformedHeader(ValueError):
    """File does not start with a valid .pcbin header."""


class TruncatedPayload(ValueError):
    """File ends before the declared point count."""


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Immutable (N, 3) float64 point set, meters. May be empty."""

    points: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if not np.all(np.isfinite(pts)):
            raise ValueError("point cloud contains non-finite values")
        pts = np.ascontiguousarray(pts)
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def __len__(self) -> int:
        return self.size

    def transformed(self, pose) -> "PointCloud":
        if self.size == 0:
            return self
        return PointCloud(pose.apply(self.points))


@dataclass(frozen=True, eq=False)
class FrameSequence:
    """Per-frame masked object clouds, with strictly increasing indices."""

    frame_id: str
    frames: tuple  # of (frame_index, PointCloud)

    def __post_init__(self):
        frames = tuple((int(i), c) for i, c in self.frames)
        idx = [i for i, _ in frames]
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("frame indices must be strictly increasing")
        object.__setattr__(self, "frames", frames)

    def __len__(self) -> int:
        return len(self.frames)


def remove_outliers(cloud: PointCloud, k: int = 30, std_ratio: float = 2.0) -> PointCloud:
    """Statistical outlier removal on k-NN mean distances.

    A point is dropped when its mean distance to its k nearest neighbors
    exceeds (global mean + std_ratio * global std) of those mean distances.
    Clouds with size <= k are returned unchanged with a TooFewPoints warning.
    """
    n = cloud.size
    if n <= k:
        warnings.warn(
            f"cloud of {n} points <= k={k}; outlier removal skipped",
            TooFewPoints,
            stacklevel=2,
        )
        return cloud
    tree = cKDTree(cloud.points)
    # k+1 because each point is its own nearest neighbor
    dists, _ = tree.query(cloud.points, k=k + 1)
    mean_d = dists[:, 1:].mean(axis=1)
    keep = mean_d <= mean_d.mean() + std_ratio * mean_d.std()
    return PointCloud(cloud.points[keep])


def object_center(cloud: PointCloud) -> np.ndarray:
    """Center of the per-dimension [p5, p95] percentile bounding box."""
    if cloud.size == 0:
        raise EmptyCloud("cannot compute center of an empty cloud")
    lo = np.percentile(cloud.points, 5.0, axis=0)
    hi = np.percentile(cloud.points, 95.0, axis=0)
    return (lo + hi) / 2.0


def save_pcbin(cloud: PointCloud, path) -> None:
    """Write the .pcbin format: magic, uint64 count, N x 3 float32, little-endian."""
    pts = cloud.points.astype("<f4")
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<Q", pts.shape[0]))
        f.write(pts.tobytes())


def load_pcbin(path) -> PointCloud:
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < 12 or data[:4] != _MAGIC:
        raise MalformedHeader(f"{path}: not a PCB1 file")
    (count,) = struct.unpack("<Q", data[4:12])
    need = 12 + count * 12
    if len(data) < need:
        raise TruncatedPayload(
            f"{path}: expected {count} points ({need} bytes), file has {len(data)}"
        )
    pts = np.frombuffer(data[12:need], dtype="<f4").reshape(count, 3)
    return PointCloud(pts.astype(float))


def save_sequence(seq: FrameSequence, directory) -> Path:
    """Write one .pcbin per frame plus a manifest; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, cloud in seq.frames:
        rel = f"frame_{i:06d}.pcbin"
        save_pcbin(cloud, directory / rel)
        entries.append({"frame_index": i, "path": rel})
    manifest = {"frame_id": seq.frame_id, "frames": entries}
    manifest_path = directory / "frames.json"
    with open(manifest_path, "w") as f:
        json.dump(manifest, f, indent=1, sort_keys=True)
        f.write("\n")
    return manifest_path


def load_sequence(manifest_path) -> FrameSequence:
    manifest_path = Path(manifest_path)
    with open(manifest_path) as f:
        manifest = json.load(f)
    frames = []
    for e in manifest["frames"]:
        cloud = load_pcbin(manifest_path.parent / e["path"])
        frames.append((e["frame_index"], cloud))
    return FrameSequence(frame_id=manifest["frame_id"], frames=tuple(frames))
