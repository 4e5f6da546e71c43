import math

import numpy as np
import pytest

from psidesk.geom import Pose, PoseTrajectory


def make_surface(n: int = 2000, seed: int = 0) -> np.ndarray:
    """Non-symmetric bumpy patch, roughly 0.3 m across, centered near origin.

    A height field: fine for tracking tests, but its mostly-vertical normals
    leave yaw weakly constrained, so tight rotation-accuracy tests should use
    make_blob instead.
    """
    rng = np.random.default_rng(seed)
    xy = rng.uniform(-0.15, 0.15, size=(n, 2))
    x, y = xy[:, 0], xy[:, 1]
    z = (
        0.05 * np.sin(9.0 * x + 1.0) * np.cos(7.0 * y - 0.5)
        + 0.08 * x
        - 0.06 * y
        + 0.25 * x * x
        + 0.18 * y * y * y
        + 0.03 * np.exp(-60.0 * ((x - 0.05) ** 2 + (y + 0.03) ** 2))
    )
    return np.column_stack([x, y, z])


def make_blob(n: int = 2000, seed: int = 0) -> np.ndarray:
    """Closed bumpy blob, ~0.24 m across, with normals in every direction.

    The bump pattern is non-symmetric and its slopes are steep enough that
    all six rigid degrees of freedom are strongly observable, which is what
    the millimeter-level registration accuracy tests need.
    """
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
    return d * r[:, None] + np.array([0.03, -0.02, 0.01])


def random_pose(rng, max_rot: float = math.pi * 0.9, max_trans: float = 1.0) -> Pose:
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    angle = rng.uniform(0.0, max_rot)
    trans = rng.uniform(-max_trans, max_trans, size=3)
    return Pose(angle * axis, trans)


def random_relative_trajectory(rng, n: int = 16, frame_id: str = "obj") -> PoseTrajectory:
    """Relative trajectory starting at identity with smooth random motion."""
    entries = [(0, Pose.identity())]
    pose = Pose.identity()
    for i in range(1, n):
        step = random_pose(rng, max_rot=0.15, max_trans=0.03)
        from psidesk.geom import compose

        pose = compose(step, pose)
        entries.append((i, pose))
    return PoseTrajectory(frame_id=frame_id, entries=tuple(entries))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


# One verdict line per acceptance criterion, filled by tests/test_acceptance.py.
# Printed in the terminal summary so default output capture cannot swallow them.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
