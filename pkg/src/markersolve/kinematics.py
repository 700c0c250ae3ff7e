"""Skeletons, marker layouts, motions and the rotation/kinematics operations."""

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from . import kernels
from .errors import ContractError, DegenerateGeometryError
from .rotation import (ANTIPARALLEL_TOL, axis_angle_matrix, geodesic_batch, is_rotation, kabsch_batch,
                       swing_batch, twist_angle_about)

PARTS = ("body", "left_hand", "right_hand")
NULL_LABEL = "null"
# Relative second singular value below which a point set counts as collinear.
RANK_TOL = 1e-9


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Skeleton:
    """Kinematic tree in topological order; ``parents[0] == -1``."""

    names: tuple
    parents: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "parents", _frozen(self.parents, np.int64))
        object.__setattr__(self, "offsets", _frozen(self.offsets))
        K = len(self.names)
        if K == 0:
            raise ContractError("skeleton has no joints")
        if self.parents.shape != (K,) or self.offsets.shape != (K, 3):
            raise ContractError("skeleton arrays do not match joint count")
        if self.parents[0] != -1:
            raise ContractError("joint 0 must be the root")
        for i in range(1, K):
            if not 0 <= self.parents[i] < i:
                raise ContractError(f"joint {i} parent {self.parents[i]} breaks topological order")
        if len(set(self.names)) != K:
            raise ContractError("joint names must be unique")
        if not np.all(np.isfinite(self.offsets)):
            raise ContractError("non-finite joint offset")

    @property
    def n_joints(self):
        return len(self.names)

    def children(self, i):
        return [int(c) for c in np.flatnonzero(self.parents == i)]

    @property
    def primary_child(self):
        """First-declared child per joint, -1 for leaves."""
        out = np.full(self.n_joints, -1, dtype=np.int64)
        for i in range(self.n_joints - 1, 0, -1):
            out[self.parents[i]] = i
        return out

    @property
    def leaves(self):
        """Non-root joints without children."""
        pc = self.primary_child
        return np.array([i for i in range(1, self.n_joints) if pc[i] < 0], dtype=np.int64)

    def index(self, name):
        return self.names.index(name)

    def with_offsets(self, offsets):
        return Skeleton(self.names, self.parents, offsets)

    def same_topology(self, other):
        return self.names == other.names and np.array_equal(self.parents, other.parents)


@dataclass(frozen=True, eq=False)
class MarkerLayout:
    labels: tuple
    joints: np.ndarray
    offsets: np.ndarray
    parts: tuple

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "parts", tuple(self.parts))
        object.__setattr__(self, "joints", _frozen(self.joints, np.int64))
        object.__setattr__(self, "offsets", _frozen(self.offsets).reshape(-1, 3))
        N = len(self.labels)
        if len(set(self.labels)) != N:
            raise ContractError("marker labels must be unique")
        if NULL_LABEL in self.labels:
            raise ContractError(f"label {NULL_LABEL!r} is reserved")
        if self.joints.shape != (N,) or self.offsets.shape != (N, 3) or len(self.parts) != N:
            raise ContractError("layout arrays do not match marker count")
        bad = set(self.parts) - set(PARTS)
        if bad:
            raise ContractError(f"unknown marker part(s) {sorted(bad)}")

    @property
    def n_markers(self):
        return len(self.labels)

    def validate_for(self, skeleton):
        if len(self.joints) and (self.joints.min() < 0 or self.joints.max() >= skeleton.n_joints):
            raise ContractError("layout references a joint outside the skeleton")

    def part_mask(self, part):
        return np.array([p == part for p in self.parts], dtype=bool)


class MotionFrame(NamedTuple):
    root_translation: np.ndarray
    rotations: np.ndarray


@dataclass(frozen=True, eq=False)
class Motion:
    """``root_translation`` is ``(T, 3)``, ``rotations`` is ``(T, K, 3, 3)``."""

    frame_rate: float
    root_translation: np.ndarray
    rotations: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "frame_rate", float(self.frame_rate))
        object.__setattr__(self, "root_translation", _frozen(self.root_translation).reshape(-1, 3))
        rot = _frozen(self.rotations)
        if rot.ndim != 4 or rot.shape[-2:] != (3, 3) or rot.shape[0] != len(self.root_translation):
            raise ContractError("rotations must be (T, K, 3, 3) matching the translations")
        object.__setattr__(self, "rotations", rot)
        if rot.size and not is_rotation(rot, tol=1e-6):
            raise ContractError("motion contains a non-rotation matrix")

    @property
    def n_frames(self):
        return len(self.root_translation)

    @property
    def n_joints(self):
        return self.rotations.shape[1]

    def frame(self, t):
        return MotionFrame(self.root_translation[t], self.rotations[t])


@dataclass(frozen=True, eq=False)
class FramePointCloud:
    time_index: int
    points: np.ndarray
    part_tags: Optional[tuple] = None

    def __post_init__(self):
        pts = _frozen(self.points).reshape(-1, 3)
        if not np.all(np.isfinite(pts)):
            raise ContractError(f"frame {self.time_index}: non-finite point coordinates")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "time_index", int(self.time_index))
        if self.part_tags is not None:
            tags = tuple(self.part_tags)
            if len(tags) != len(pts):
                raise ContractError("part_tags length differs from point count")
            object.__setattr__(self, "part_tags", tags)

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True, eq=False)
class LabeledMarkers:
    """Ordered marker positions ``(T, N, 3)`` with a visibility mask ``(T, N)``."""

    positions: np.ndarray
    visibility: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "positions", _frozen(self.positions))
        object.__setattr__(self, "visibility", _frozen(self.visibility, bool))
        if self.positions.shape[:2] != self.visibility.shape:
            raise ContractError("visibility does not match positions")


@dataclass(frozen=True)
class SwingTwist:
    swing: np.ndarray
    twist_angle: float
    axis: np.ndarray
    singular: bool = field(default=False)

    def twist(self):
        return axis_angle_matrix(self.axis, self.twist_angle)

    def compose(self):
        return self.swing @ self.twist()


def forward_kinematics(skeleton: Skeleton, frame: MotionFrame):
    """Global joint positions ``(K, 3)`` and rotations ``(K, 3, 3)`` of one frame."""
    rot = np.asarray(frame.rotations, dtype=float)
    if rot.shape != (skeleton.n_joints, 3, 3):
        raise ContractError("frame rotation count does not match the skeleton")
    pos, glob = kernels.forward_kinematics(
        skeleton.parents, skeleton.offsets,
        np.asarray(frame.root_translation, dtype=float)[None], rot[None])
    return pos[0], glob[0]


def motion_forward_kinematics(skeleton: Skeleton, motion: Motion):
    """Sequence FK: ``(T, K, 3)`` positions and ``(T, K, 3, 3)`` rotations."""
    if motion.n_joints != skeleton.n_joints:
        raise ContractError("motion joint count does not match the skeleton")
    return kernels.forward_kinematics(skeleton.parents, skeleton.offsets,
                                      motion.root_translation, motion.rotations)


def swing_from_vectors(estimated_dir, template_dir):
    """Rotation with no twist that turns ``template_dir`` onto ``estimated_dir``.

    Raises DegenerateGeometryError for zero-length input.  Anti-parallel
    input yields a half turn about a fixed axis perpendicular to the template.
    """
    return swing_batch(np.asarray(estimated_dir, dtype=float)[None],
                       np.asarray(template_dir, dtype=float)[None])[0]


def swing_twist_decompose(rotation, axis) -> SwingTwist:
    rotation = np.asarray(rotation, dtype=float)
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if n < 1e-12:
        raise DegenerateGeometryError("degenerate bone")
    axis = axis / n
    moved = rotation @ axis
    # Any rotation sending the axis to its negative is a half turn about a
    # perpendicular axis: a pure swing, with the split itself undefined.
    if moved @ axis < 0 and np.linalg.norm(np.cross(axis, moved)) < ANTIPARALLEL_TOL:
        return SwingTwist(rotation.copy(), 0.0, axis, singular=True)
    swing = swing_from_vectors(moved, axis)
    angle = float(twist_angle_about(swing.T @ rotation, axis))
    return SwingTwist(swing, angle, axis)


def kabsch_rotation(source, target):
    """Proper rotation best aligning centered ``source`` onto centered ``target``."""
    source = np.asarray(source, dtype=float)
    target = np.asarray(target, dtype=float)
    if source.shape != target.shape or source.ndim != 2 or source.shape[1] != 3:
        raise ContractError("source and target must be matching (P, 3) arrays")
    if len(source) < 3:
        raise DegenerateGeometryError("rank deficient")
    for pts in (source, target):
        s = np.linalg.svd(pts - pts.mean(axis=0), compute_uv=False)
        if s[0] == 0 or s[1] <= RANK_TOL * s[0]:
            raise DegenerateGeometryError("rank deficient")
    rot, ratio = kabsch_batch(source, target)
    if ratio <= RANK_TOL:
        raise DegenerateGeometryError("rank deficient")
    return rot


def geodesic_angle(a, b):
    """Rotation angle of ``a^T b`` in radians, in [0, pi]."""
    return float(geodesic_batch(np.asarray(a, dtype=float), np.asarray(b, dtype=float)))


def rotations_valid(rotations: Sequence, tol=1e-9):
    return is_rotation(np.asarray(rotations), tol=tol)
