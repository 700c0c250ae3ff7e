"""Hybrid inverse kinematics: joint positions plus twist angles to local rotations.

The root orientation comes from a Kabsch fit of the root's rigid joint subset.
Every other non-leaf joint gets the swing that points its primary bone at the
estimated child position, composed with the supplied twist about that bone.
In ``corrected`` mode the bone vector starts at the joint position produced
by forward kinematics of the already-solved parents; in ``naive`` mode it
starts at the raw estimate, so parent errors are not compensated.
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .errors import ContractError, DegenerateGeometryError
from .kinematics import (RANK_TOL, LabeledMarkers, MarkerLayout, Motion, MotionFrame, Skeleton,
                         kabsch_rotation, motion_forward_kinematics)
from .rotation import MIN_BONE_LENGTH, kabsch_batch, twist_batch, wrap_angle

MODES = ("corrected", "naive")


@dataclass(frozen=True, eq=False)
class PoseEstimate:
    joint_positions: np.ndarray  # (K, 3)
    twist_angles: np.ndarray     # (K,) radians
    frame_offsets: np.ndarray    # (K, 3)

    def __post_init__(self):
        for name in ("joint_positions", "twist_angles", "frame_offsets"):
            a = np.asarray(getattr(self, name), dtype=float)
            if not np.all(np.isfinite(a)):
                raise ContractError(f"{name} contains NaN or inf")
            object.__setattr__(self, name, a)
        object.__setattr__(self, "twist_angles", wrap_angle(self.twist_angles))


class ArrayPoseProvider:
    """Pose estimates held as ``(T, K, 3)`` / ``(T, K)`` / ``(T, K, 3)`` arrays.

    The other providers build one of these; any object with ``n_frames`` and
    ``batch(frames)`` works as a provider.
    """

    def __init__(self, positions, twists, offsets):
        self.positions = np.asarray(positions, dtype=float)
        self.twists = wrap_angle(np.asarray(twists, dtype=float))
        self.offsets = np.asarray(offsets, dtype=float)
        self._cos_sin = None
        T, K = self.positions.shape[:2]
        if self.twists.shape != (T, K) or self.offsets.shape != (T, K, 3):
            raise ContractError("pose estimate arrays are misaligned")
        if not (np.all(np.isfinite(self.positions)) and np.all(np.isfinite(self.twists))
                and np.all(np.isfinite(self.offsets))):
            raise ContractError("pose estimates contain NaN or inf")

    @property
    def n_frames(self):
        return len(self.positions)

    def estimate(self, t) -> PoseEstimate:
        return PoseEstimate(self.positions[t], self.twists[t], self.offsets[t])

    def batch(self, frames=None):
        idx = np.arange(self.n_frames) if frames is None else np.asarray(list(frames), dtype=np.int64)
        if len(idx) and (idx.min() < 0 or idx.max() >= self.n_frames):
            raise ContractError(f"provider covers frames 0..{self.n_frames - 1} only")
        return self.positions[idx], self.twists[idx], self.offsets[idx]

    @classmethod
    def from_cos_sin(cls, positions, cos_sin, offsets):
        """Twists given as ``(T, K, 2)`` (cos, sin) pairs, not necessarily unit length."""
        cos_sin = np.asarray(cos_sin, dtype=float)
        out = cls(positions, np.arctan2(cos_sin[..., 1], cos_sin[..., 0]), offsets)
        out._cos_sin = cos_sin.copy()  # kept verbatim so re-export is lossless
        return out

    def cos_sin(self):
        if self._cos_sin is not None:
            return self._cos_sin
        return np.stack([np.cos(self.twists), np.sin(self.twists)], axis=-1)


def twist_axes(skeleton: Skeleton):
    """Unit bone axis per joint: toward the primary child, or along the joint's
    own offset for leaves.  Zero-length bones get +y."""
    pc = skeleton.primary_child
    bones = np.where(pc[:, None] >= 0, skeleton.offsets[np.maximum(pc, 0)], skeleton.offsets)
    n = np.linalg.norm(bones, axis=1, keepdims=True)
    return np.where(n > MIN_BONE_LENGTH, bones / np.where(n > 0, n, 1.0), [0.0, 1.0, 0.0])


def true_twists(skeleton: Skeleton, motion: Motion):
    """Twist of each local rotation about its bone axis, ``(T, K)``."""
    axes = np.broadcast_to(twist_axes(skeleton), motion.rotations.shape[:2] + (3,))
    return twist_batch(motion.rotations, axes)


def markers_to_joints(skeleton, layout: MarkerLayout, markers: LabeledMarkers, motion: Motion):
    """Joint positions implied by observed markers under the true joint rotations.

    Each joint averages ``marker - R_joint @ local_offset`` over its visible
    markers; joints with none visible keep their ground-truth position.
    """
    pos, glob = motion_forward_kinematics(skeleton, motion)
    j = layout.joints
    implied = markers.positions - np.einsum("tnij,nj->tni", glob[:, j], layout.offsets)
    vis = markers.visibility.astype(float)
    K = skeleton.n_joints
    onehot = np.zeros((len(j), K))
    onehot[np.arange(len(j)), j] = 1.0
    sums = np.einsum("tn,nk,tnd->tkd", vis, onehot, np.where(vis[..., None] > 0, implied, 0.0))
    counts = vis @ onehot
    out = pos.copy()
    seen = counts > 0
    out[seen] = sums[seen] / counts[seen][:, None]
    return out


def oracle_provider(skeleton: Skeleton, motion: Motion, position_sigma=0.0, twist_sigma=0.0,
                    offset_sigma=0.0, seed=0, markers: Optional[LabeledMarkers] = None,
                    layout: Optional[MarkerLayout] = None):
    """Ground-truth estimates with optional Gaussian noise.

    With ``markers`` and ``layout`` the joint positions are derived from the
    (possibly jittered or mislabeled) markers instead of exact FK.
    """
    rng = np.random.default_rng(seed)
    if markers is not None:
        if layout is None:
            raise ValueError("markers need their layout")
        positions = markers_to_joints(skeleton, layout, markers, motion)
    else:
        positions = motion_forward_kinematics(skeleton, motion)[0]
    T, K = positions.shape[:2]
    if position_sigma > 0:
        positions = positions + rng.normal(0.0, position_sigma, positions.shape)
    twists = true_twists(skeleton, motion)
    if twist_sigma > 0:
        twists = twists + rng.normal(0.0, twist_sigma, twists.shape)
    offsets = np.broadcast_to(skeleton.offsets, (T, K, 3)).copy()
    if offset_sigma > 0:
        offsets[:, 1:] += rng.normal(0.0, offset_sigma, (T, K - 1, 3))
    return ArrayPoseProvider(positions, twists, offsets)


def average_skeleton(frame_offsets):
    """Per-joint mean offset over frames, ``(T, K, 3) -> (K, 3)``."""
    frame_offsets = np.asarray(frame_offsets, dtype=float)
    if frame_offsets.ndim != 3 or len(frame_offsets) < 1:
        raise ValueError("need at least one frame of offsets")
    return frame_offsets.mean(axis=0)


def default_root_subset(skeleton: Skeleton):
    return [0] + skeleton.children(0)


def _root_source(template, subset):
    if subset[0] != 0 or any(template.parents[j] != 0 for j in subset[1:]):
        raise ContractError("root subset must be the root followed by its direct children")
    src = np.zeros((len(subset), 3))
    src[1:] = template.offsets[subset[1:]]
    return src


def solve_root(estimated_positions, template: Skeleton, subset: Optional[Sequence[int]] = None):
    """Root orientation by Kabsch fit of template offsets to the estimates; translation is
    the estimated root position."""
    subset = list(default_root_subset(template) if subset is None else subset)
    est = np.asarray(estimated_positions, dtype=float)
    try:
        rot = kabsch_rotation(_root_source(template, subset), est[subset] - est[0])
    except DegenerateGeometryError:
        raise DegenerateGeometryError("rank deficient root") from None
    return rot, est[0].copy()


def _check_solvable(template: Skeleton):
    pc = template.primary_child
    for i in range(1, template.n_joints):
        if pc[i] >= 0 and np.linalg.norm(template.offsets[pc[i]]) < MIN_BONE_LENGTH:
            raise DegenerateGeometryError(f"degenerate bone {template.names[i]}->{template.names[pc[i]]}")


def _solve_batch(positions, twists, template, mode, subset, backend=None):
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    T, K = positions.shape[:2]
    if K != template.n_joints:
        raise ContractError(f"estimate has {K} joints, template has {template.n_joints}")
    _check_solvable(template)
    subset = list(default_root_subset(template) if subset is None else subset)
    src = _root_source(template, subset)
    s = np.linalg.svd(src - src.mean(axis=0), compute_uv=False)
    if len(subset) < 3 or s[1] <= RANK_TOL * s[0]:
        raise DegenerateGeometryError("rank deficient root")
    if T == 0:
        return np.zeros((0, K, 3, 3))
    tgt = positions[:, subset] - positions[:, :1]
    root_rot, ratio = kabsch_batch(np.broadcast_to(src, tgt.shape), tgt)
    bad = np.flatnonzero(ratio <= RANK_TOL)
    if len(bad):
        raise DegenerateGeometryError(f"frame {bad[0]}: rank deficient root")
    return kernels.solve_chain(template.parents, template.offsets, template.primary_child,
                               positions, twists, root_rot, corrected=(mode == "corrected"),
                               backend=backend)


def solve_frame(estimate: PoseEstimate, template: Skeleton, mode="corrected", root_subset=None,
                backend=None) -> MotionFrame:
    pos = np.asarray(estimate.joint_positions, dtype=float)
    if pos.shape != (template.n_joints, 3):
        raise ContractError("estimate joint count does not match the template")
    local = _solve_batch(pos[None], np.asarray(estimate.twist_angles, float)[None], template,
                         mode, root_subset, backend)
    return MotionFrame(pos[0].copy(), local[0])


def solve_sequence(provider, template: Skeleton, frames=None, mode="corrected", root_subset=None,
                   frame_rate=60.0, backend=None):
    """Average the per-frame offsets into one skeleton, then solve every frame against it.

    Returns ``(Motion, Skeleton)``.
    """
    positions, twists, offsets = provider.batch(frames)
    if len(positions) == 0:
        raise ContractError("no frames to solve")
    skeleton = template.with_offsets(average_skeleton(offsets))
    local = _solve_batch(positions, twists, skeleton, mode, root_subset, backend)
    return Motion(frame_rate, positions[:, 0], local), skeleton
