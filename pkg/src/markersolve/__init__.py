"""Unlabeled marker point clouds to skeletal motion.

Frame-wise Sinkhorn label assignment, tracklet clustering over time and a
hybrid swing/twist IK solver, plus the synthetic data and metrics that
exercise them.
"""

__version__ = "0.1.0"

from .assignment import ConfidenceMatrix, FrameLabeling, extract_labels, sinkhorn_normalize
from .errors import ConfigError, ContractError, DegenerateGeometryError
from .kernels import get_backend, set_backend
from .kinematics import (FramePointCloud, LabeledMarkers, MarkerLayout, Motion, MotionFrame, Skeleton,
                         SwingTwist, forward_kinematics, geodesic_angle, kabsch_rotation,
                         swing_from_vectors, swing_twist_decompose)
from .labeling import LabelingParams, label_sequence
from .metrics import labeling_metrics, solving_metrics
from .simulate import NoiseConfig, simulate
from .solver import PoseEstimate, solve_frame, solve_sequence
from .tracklet import MarkerGraph, Tracklet, assign_tracklet_labels, build_graph, greedy_cluster
