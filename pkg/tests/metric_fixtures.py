"""Hand-enumerated metric fixtures, shared by the unit and acceptance tests."""

import numpy as np

from markersolve.kinematics import Motion, Skeleton
from markersolve.rotation import axis_angle_matrix


def swap_and_ghost_frame():
    """Nine real markers plus one ghost; labels 0 and 1 swapped, ghost nulled.

    Hand count: 7 hits, 2 swaps, 0 false nulls, 0 ghosts accepted, 1 ghost
    rejected.  Accuracy 8/10; precision = recall = 7/9, so F1 = 7/9.
    """
    truth = np.array([0, 1, 2, 3, 4, 5, 6, 7, 8, -1])
    pred = np.array([1, 0, 2, 3, 4, 5, 6, 7, 8, -1])
    expected = dict(hits=7, swaps=2, false_null=0, ghost_accepted=0, ghost_rejected=1)
    return [pred], [truth], expected, 0.8, 7 / 9


def one_joint_motion(angle_deg, n_frames=5):
    sk = Skeleton(("root",), np.array([-1]), np.zeros((1, 3)))
    r = axis_angle_matrix(np.array([0.6, -0.8, 0.0]), np.deg2rad(angle_deg))
    return sk, Motion(30.0, np.zeros((n_frames, 3)), np.broadcast_to(r, (n_frames, 1, 3, 3)).copy())
