"""psidesk: desk-scale object-trajectory extraction, filtering, and imitation.

The pipeline turns point-cloud sequences of a manipulated object into
robot-executable behavior in four steps:

1. Perceive (``cloud``, ``registration``, ``posegraph``): track the object's
   6-DoF pose per frame with two-pass point-to-plane ICP, then refine the
   trajectory with a robust pose graph over stride edges.
2. Simulate (``simarm``, ``taskeval``, ``grasp``, ``filterpipe``): replay
   each trajectory from 8 anchor grasps on a kinematic arm, label each grasp
   with execution plus task success, and discard episodes where every grasp
   fails.
3. Imitate (``imitate``): train a small two-stage policy that predicts 16
   relative waypoints and 8 anchor-grasp success probabilities.
4. Act (``grasp``, ``geom``): score externally generated candidate grasps by
   nearest-anchor inheritance, select the best, and compose the predicted
   relative trajectory into end-effector targets.

``flowalign`` converts between point-flow and rigid-transform trajectory
representations.  ``cli`` exposes the batch pipeline as ``psi`` subcommands.
"""

from .cloud import FrameSequence, PointCloud, load_pcbin, load_sequence, object_center, remove_outliers, save_pcbin, save_sequence
from .flowalign import FlowPair, flow_to_se3, gen_flow_labels, recover_relative
from .filterpipe import EpisodeRecord, FilteredDataset, FilterParams, filter_episode, load_dataset, run_dataset, save_dataset
from .geom import (
    Pose,
    PoseTrajectory,
    WaypointTrajectory,
    apply_relative,
    canonicalize_rotvec,
    compose,
    from_object_frame,
    grasp_to_ee_trajectory,
    inverse,
    load_trajectory,
    matrix_to_rotvec,
    resample_trajectory,
    rotation_distance,
    rotvec_to_matrix,
    save_trajectory,
    to_object_frame,
)
from .grasp import (
    AnchorGraspSet,
    CandidateGrasp,
    GraspScores,
    assign_candidate,
    generate_anchors,
    generate_candidates_grid,
    select_grasp,
)
from .imitate import FeatureVector, PolicyModel, load_model, predict, save_model, train_stage1, train_stage2
from .posegraph import GraphEdge, GraphParams, PoseGraph, build_graph, dump_graph, optimize
from .registration import IcpParams, TrackParams, icp_register, track_sequence
from .simarm import (
    ArmModel,
    ExecutionResult,
    FailureMode,
    Scene,
    check_collision,
    execute_grasp_trajectory,
    fk,
    list_arms,
    load_arm,
    solve_ik,
)
from .taskeval import TaskKind, TaskSpec, TaskThresholds, evaluate

__version__ = "0.1.0"
