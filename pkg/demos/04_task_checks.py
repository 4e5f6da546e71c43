"""Binary task verdicts on object-center trajectories.

Each task kind reduces a trajectory to a yes/no outcome: did the pick
end near the goal and upright, did the pour tilt far enough toward the
target, did the stir or draw cover enough path inside its region. The
checks run on poses alone, so fixtures are cheap to construct.
"""

import numpy as np

from psidesk.geom import Pose, PoseTrajectory
from psidesk.taskeval import TaskSpec, evaluate


def slide(u, centers):
    u = np.asarray(u, dtype=float)
    entries = tuple((i, Pose(np.zeros(3), np.asarray(c) - u))
                    for i, c in enumerate(centers))
    return PoseTrajectory(frame_id="demo", entries=entries)


u = np.array([0.30, 0.20, 0.05])

# PickPlace: finish within 8 cm of the goal, under 15 cm height, under 45 deg tilt
goal = u + [0.06, 0.0, 0.0]
place = TaskSpec(kind="PickPlace", goal3d=goal, table_height=0.0,
                 upright_axis=[0, 0, 1])
good = slide(u, [u, u + [0.03, 0, 0.20], goal])
bad = slide(u, [u, u + [0.03, 0, 0.20], goal + [0.00, 0.00, 0.25]])
print("PickPlace lands at goal:      ", evaluate(place, good, u))
print("PickPlace hovers 25 cm up:    ", evaluate(place, bad, u))

# Pour: tilt past 60 degrees with the spill direction facing the target
tilt = Pose([np.radians(75.0), 0.0, 0.0], np.zeros(3))
spill_at = u + [0.0, -0.05, 0.0]  # +x roll tips the mouth toward -y
pour_traj = PoseTrajectory(frame_id="demo", entries=(
    (0, Pose.identity()),
    (1, Pose(tilt.rotvec, spill_at - tilt.rot_matrix() @ u)),
))
pour = TaskSpec(kind="Pour", goal3d=spill_at, upright_axis=[0, 0, 1])
print("Pour 75 deg toward the cup:   ", evaluate(pour, pour_traj, u))
pour_away = TaskSpec(kind="Pour", goal3d=u + [0.0, 0.05, 0.0], upright_axis=[0, 0, 1])
print("Pour away from the cup:       ", evaluate(pour_away, pour_traj, u))

# Stir: more than 10 cm of path inside a 15 cm cylinder around the bowl
bowl = u.copy()
angles = np.linspace(0.0, 4.0 * np.pi, 60)
circle = [bowl + [0.05 * np.cos(a), 0.05 * np.sin(a), 0.0] for a in angles]
stir = TaskSpec(kind="Stir", region_center=bowl)
print("Stir two laps of the bowl:    ", evaluate(stir, slide(bowl + [0.05, 0, 0], circle), circle[0]))
print("Stir a 9 cm poke:             ",
      evaluate(stir, slide(bowl, [bowl, bowl + [0.09, 0, 0]]), bowl))

# Draw: same idea, tighter cylinder, more than 20 cm of path
page = np.array([0.30, 0.20, 0.05])
zig = [page + [dx, 0.03 * (i % 2), 0.0]
       for i, dx in enumerate(np.linspace(-0.04, 0.04, 9))]
draw = TaskSpec(kind="Draw", region_center=page)
print("Draw a zigzag:                ", evaluate(draw, slide(zig[0], zig), zig[0]))
