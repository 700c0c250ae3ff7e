"""Synthetic ground truth: skeleton presets, marker layouts, motions and noisy point clouds.

Coordinates are y-up meters.  Hand joints are named with an ``L_``/``R_``
prefix, which is how parts are recovered from a bare skeleton.

Preset sizes:

* ``body22``: 22 joints, 53 markers.
* ``hand16``: left hand, wrist plus five 3-joint fingers, 19 markers.
* ``fullbody54``: ``body22`` with a ``hand16`` on each wrist, 91 markers.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .kinematics import (PARTS, FramePointCloud, LabeledMarkers, MarkerLayout, Motion, Skeleton,
                         motion_forward_kinematics)
from .rotation import rotvec_to_matrix

PRESETS = ("body22", "hand16", "fullbody54")

_BODY22 = [
    # name, parent, offset
    ("Hips", None, (0.0, 0.0, 0.0)),
    ("Spine", "Hips", (0.0, 0.10, 0.0)),
    ("Spine1", "Spine", (0.0, 0.12, 0.0)),
    ("Spine2", "Spine1", (0.0, 0.12, 0.0)),
    ("Neck", "Spine2", (0.0, 0.15, 0.0)),
    ("Head", "Neck", (0.0, 0.10, 0.02)),
    ("LeftShoulder", "Spine2", (0.04, 0.10, 0.0)),
    ("LeftArm", "LeftShoulder", (0.14, 0.0, 0.0)),
    ("LeftForeArm", "LeftArm", (0.28, 0.0, 0.0)),
    ("LeftHand", "LeftForeArm", (0.25, 0.0, 0.0)),
    ("RightShoulder", "Spine2", (-0.04, 0.10, 0.0)),
    ("RightArm", "RightShoulder", (-0.14, 0.0, 0.0)),
    ("RightForeArm", "RightArm", (-0.28, 0.0, 0.0)),
    ("RightHand", "RightForeArm", (-0.25, 0.0, 0.0)),
    ("LeftUpLeg", "Hips", (0.09, -0.05, 0.0)),
    ("LeftLeg", "LeftUpLeg", (0.0, -0.42, 0.0)),
    ("LeftFoot", "LeftLeg", (0.0, -0.40, 0.0)),
    ("LeftToeBase", "LeftFoot", (0.0, -0.06, 0.13)),
    ("RightUpLeg", "Hips", (-0.09, -0.05, 0.0)),
    ("RightLeg", "RightUpLeg", (0.0, -0.42, 0.0)),
    ("RightFoot", "RightLeg", (0.0, -0.40, 0.0)),
    ("RightToeBase", "RightFoot", (0.0, -0.06, 0.13)),
]

# markers per body joint; 53 in total
_BODY_MARKERS = {
    "Hips": 4, "Spine": 2, "Spine1": 3, "Spine2": 4, "Neck": 1, "Head": 5,
    "LeftShoulder": 1, "RightShoulder": 1, "LeftArm": 3, "RightArm": 3,
    "LeftForeArm": 3, "RightForeArm": 3, "LeftHand": 2, "RightHand": 2,
    "LeftUpLeg": 3, "RightUpLeg": 3, "LeftLeg": 2, "RightLeg": 2,
    "LeftFoot": 2, "RightFoot": 2, "LeftToeBase": 1, "RightToeBase": 1,
}

# left hand, fingers along +x; middle finger first so it drives the wrist swing
_HAND16 = [
    ("Wrist", None, (0.0, 0.0, 0.0)),
    ("Middle1", "Wrist", (0.090, 0.0, 0.0)),
    ("Middle2", "Middle1", (0.045, 0.0, 0.0)),
    ("Middle3", "Middle2", (0.028, 0.0, 0.0)),
    ("Index1", "Wrist", (0.085, 0.0, 0.022)),
    ("Index2", "Index1", (0.040, 0.0, 0.0)),
    ("Index3", "Index2", (0.025, 0.0, 0.0)),
    ("Ring1", "Wrist", (0.085, 0.0, -0.020)),
    ("Ring2", "Ring1", (0.042, 0.0, 0.0)),
    ("Ring3", "Ring2", (0.026, 0.0, 0.0)),
    ("Pinky1", "Wrist", (0.075, 0.0, -0.040)),
    ("Pinky2", "Pinky1", (0.032, 0.0, 0.0)),
    ("Pinky3", "Pinky2", (0.022, 0.0, 0.0)),
    ("Thumb1", "Wrist", (0.030, -0.010, 0.035)),
    ("Thumb2", "Thumb1", (0.030, 0.0, 0.015)),
    ("Thumb3", "Thumb2", (0.025, 0.0, 0.010)),
]
_HAND_EXTRA_WRIST_MARKERS = 3
# hand root offset from the body wrist joint in fullbody54
_HAND_ATTACH = 0.03

BODY_MARKER_RADIUS = 0.06
HAND_MARKER_RADIUS = 0.008


def joint_part(name):
    if name.startswith("L_"):
        return "left_hand"
    if name.startswith("R_"):
        return "right_hand"
    return "body"


def _hand_rows(prefix, mirror, root_parent=None, root_offset=(0.0, 0.0, 0.0)):
    rows = []
    for name, parent, off in _HAND16:
        off = np.array(off) * (mirror, 1.0, 1.0)
        if parent is None:
            rows.append((prefix + name, root_parent, tuple(root_offset)))
        else:
            rows.append((prefix + name, prefix + parent, tuple(off)))
    return rows


def _skeleton_from_rows(rows):
    names = [r[0] for r in rows]
    parents = [-1 if r[1] is None else names.index(r[1]) for r in rows]
    return Skeleton(names, parents, [r[2] for r in rows])


def synth_skeleton(preset):
    """One of ``body22``, ``hand16`` (left hand) or ``fullbody54``."""
    if preset == "body22":
        return _skeleton_from_rows(_BODY22)
    if preset == "hand16":
        return _skeleton_from_rows(_hand_rows("L_", 1.0))
    if preset == "fullbody54":
        rows = list(_BODY22)
        rows += _hand_rows("L_", 1.0, "LeftHand", (_HAND_ATTACH, 0.0, 0.0))
        rows += _hand_rows("R_", -1.0, "RightHand", (-_HAND_ATTACH, 0.0, 0.0))
        return _skeleton_from_rows(rows)
    raise ValueError(f"unknown preset {preset!r}; expected one of {PRESETS}")


def _ring_offsets(skeleton, joint, count, radius):
    """``count`` points on a circle around the bone leaving ``joint``."""
    child = skeleton.primary_child[joint]
    if child >= 0:
        bone = skeleton.offsets[child]
    else:
        bone = skeleton.offsets[joint]
    length = np.linalg.norm(bone)
    axis = bone / length if length > 0 else np.array([0.0, 1.0, 0.0])
    center = 0.5 * bone if child >= 0 else 0.5 * radius * axis
    helper = np.array([0.0, 0.0, 1.0]) if abs(axis[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    u = np.cross(axis, helper)
    u /= np.linalg.norm(u)
    v = np.cross(axis, u)
    out = []
    for k in range(count):
        a = 2.0 * np.pi * k / count + 0.25 * np.pi
        out.append(center + radius * (np.cos(a) * u + np.sin(a) * v))
    return out


def synth_layout(skeleton):
    """Marker layout for a preset skeleton.

    Body joints get the counts in ``_BODY_MARKERS`` (one marker for unknown
    joints); hand joints get one marker each plus three extra on the wrist.
    Markers sit on a ring around the bone leaving their joint.
    """
    labels, joints, offsets, parts = [], [], [], []
    for j, name in enumerate(skeleton.names):
        part = joint_part(name)
        if part == "body":
            count, radius = _BODY_MARKERS.get(name, 1), BODY_MARKER_RADIUS
        else:
            is_root = name.endswith("Wrist")
            count = 1 + (_HAND_EXTRA_WRIST_MARKERS if is_root else 0)
            radius = HAND_MARKER_RADIUS
        for k, off in enumerate(_ring_offsets(skeleton, j, count, radius)):
            labels.append(f"{name}_{k}")
            joints.append(j)
            offsets.append(off)
            parts.append(part)
    return MarkerLayout(labels, joints, offsets, parts)


def synth_motion(skeleton, duration_s, frame_rate, seed, body_amplitude=np.deg2rad(60.0),
                 hand_amplitude=np.deg2rad(45.0), max_frequency=2.0):
    """Smooth pseudo-random motion.

    Every joint's rotation vector is a sum of three sinusoids along random
    unit axes with amplitudes summing to at most the joint's amplitude and
    frequencies at most ``max_frequency`` Hz.  The root also drifts on a slow
    horizontal path at standing height.
    """
    if duration_s < 0:
        raise ValueError("duration must be non-negative")
    T = int(round(duration_s * frame_rate))
    t = np.arange(T) / frame_rate
    rng = np.random.default_rng(seed)
    K = skeleton.n_joints
    rotvec = np.zeros((T, K, 3))
    for j, name in enumerate(skeleton.names):
        amp = hand_amplitude if joint_part(name) != "body" else body_amplitude
        a = amp * rng.uniform(0.3, 1.0, 3) / 3.0
        f = rng.uniform(0.1, max_frequency, 3)
        phase = rng.uniform(0.0, 2.0 * np.pi, 3)
        axes = rng.normal(size=(3, 3))
        axes /= np.linalg.norm(axes, axis=1, keepdims=True)
        wave = a * np.sin(2.0 * np.pi * f * t[:, None] + phase)  # (T, 3)
        rotvec[:, j] = wave @ axes
    rotations = rotvec_to_matrix(rotvec)

    rest = motion_forward_kinematics(skeleton, Motion(frame_rate, np.zeros((1, 3)),
                                                      np.broadcast_to(np.eye(3), (1, K, 3, 3))))[0][0]
    height = max(0.0, -rest[:, 1].min())
    amp = rng.uniform(0.1, 0.3, 3) * (1.0, 0.1, 1.0)
    f = rng.uniform(0.05, 0.5, 3)
    phase = rng.uniform(0.0, 2.0 * np.pi, 3)
    trans = amp * np.sin(2.0 * np.pi * f * t[:, None] + phase)
    trans[:, 1] += height
    return Motion(frame_rate, trans, rotations)


def render_markers(skeleton, layout, motion):
    """Marker trajectories ``(T, N, 3)``, all visible."""
    layout.validate_for(skeleton)
    pos, glob = motion_forward_kinematics(skeleton, motion)
    j = layout.joints
    markers = np.einsum("tnij,nj->tni", glob[:, j], layout.offsets) + pos[:, j]
    return LabeledMarkers(markers, np.ones(markers.shape[:2], dtype=bool))


@dataclass(frozen=True)
class NoiseConfig:
    occlusion_prob: dict = field(default_factory=lambda: {p: 0.0 for p in PARTS})
    ghost_rate: float = 0.0
    jitter_sigma: float = 0.0
    jitter_uniform_halfwidth: float = 0.0
    shuffle: bool = False
    seed: int = 0

    def __post_init__(self):
        probs = {p: float(self.occlusion_prob.get(p, 0.0)) for p in PARTS}
        extra = set(self.occlusion_prob) - set(PARTS)
        if extra:
            raise ValueError(f"unknown part(s) in occlusion_prob: {sorted(extra)}")
        if any(not 0.0 <= v <= 1.0 for v in probs.values()):
            raise ValueError("occlusion probabilities must lie in [0, 1]")
        if self.ghost_rate < 0 or self.jitter_sigma < 0 or self.jitter_uniform_halfwidth < 0:
            raise ValueError("rates and jitter magnitudes must be non-negative")
        object.__setattr__(self, "occlusion_prob", probs)

    @classmethod
    def uniform_occlusion(cls, p, **kw):
        return cls(occlusion_prob={part: p for part in PARTS}, **kw)


GHOST = -1


@dataclass(frozen=True, eq=False)
class GroundTruthBundle:
    skeleton: Skeleton
    layout: MarkerLayout
    motion: Motion
    markers: LabeledMarkers
    correspondence: list  # per frame: label index per point, GHOST for ghosts


def jitter(points, rng, sigma=0.0, halfwidth=0.0):
    out = np.array(points, dtype=float)
    if sigma > 0:
        out += rng.normal(0.0, sigma, out.shape)
    if halfwidth > 0:
        out += rng.uniform(-halfwidth, halfwidth, out.shape)
    return out


def corrupt(markers: LabeledMarkers, layout: MarkerLayout, config: NoiseConfig):
    """Occlude, add ghosts, jitter and shuffle each frame.

    Returns ``(frames, correspondence)``; ``correspondence[t][k]`` is the label
    index of point ``k`` in frame ``t`` or ``GHOST``.
    """
    rng = np.random.default_rng(config.seed)
    T, N = markers.positions.shape[:2]
    p_occ = np.array([config.occlusion_prob[p] for p in layout.parts])
    frames, corr = [], []
    for t in range(T):
        m = markers.positions[t]
        keep = markers.visibility[t] & (rng.random(N) >= p_occ)
        idx = np.flatnonzero(keep)
        pts = jitter(m[idx], rng, config.jitter_sigma, config.jitter_uniform_halfwidth)
        n_ghost = int(rng.poisson(config.ghost_rate)) if config.ghost_rate > 0 else 0
        if n_ghost:
            ref = m[idx] if len(idx) else m
            lo, hi = ref.min(axis=0), ref.max(axis=0)
            c, half = 0.5 * (lo + hi), 0.55 * (hi - lo)
            ghosts = rng.uniform(c - half, c + half, (n_ghost, 3))
            pts = np.concatenate([pts, ghosts])
            idx = np.concatenate([idx, np.full(n_ghost, GHOST)])
        if config.shuffle:
            perm = rng.permutation(len(idx))
            pts, idx = pts[perm], idx[perm]
        frames.append(FramePointCloud(t, pts))
        corr.append(idx.astype(np.int64))
    return frames, corr


def simulate(preset, duration_s, frame_rate, noise: Optional[NoiseConfig] = None, seed=0):
    """Full generator chain: ``(frames, GroundTruthBundle)``."""
    noise = noise or NoiseConfig(seed=seed)
    skeleton = synth_skeleton(preset)
    layout = synth_layout(skeleton)
    motion = synth_motion(skeleton, duration_s, frame_rate, seed)
    markers = render_markers(skeleton, layout, motion)
    frames, corr = corrupt(markers, layout, noise)
    return frames, GroundTruthBundle(skeleton, layout, motion, markers, corr)


def separated_tracks(n_points, n_frames, th_pos, seed, extent=1.0):
    """Independent point trajectories that tracklet building must recover exactly.

    Per-frame displacement stays below ``0.45 * th_pos`` and every pair of
    points stays more than ``2.2 * th_pos`` apart in every frame.  Returns
    ``(frames, identity)`` with ``identity[t][k]`` the track of point ``k``,
    points shuffled per frame.
    """
    rng = np.random.default_rng(seed)
    spacing = 2.2 * th_pos
    step = 0.45 * th_pos
    # jittered grid keeps the initial spacing guaranteed
    side = int(np.ceil(n_points ** (1.0 / 3.0)))
    cell = max(extent / side, 4.0 * spacing)
    grid = np.stack(np.meshgrid(*[np.arange(side)] * 3, indexing="ij"), -1).reshape(-1, 3)
    grid = grid[rng.permutation(len(grid))[:n_points]] * cell
    pos = grid + rng.uniform(-0.25, 0.25, grid.shape) * (cell - spacing)
    frames, identity = [], []
    for t in range(n_frames):
        if t:
            for _ in range(100):
                d = rng.normal(size=pos.shape)
                d *= (rng.uniform(0.0, step, n_points) / np.linalg.norm(d, axis=1))[:, None]
                cand = pos + d
                gap = np.linalg.norm(cand[:, None] - cand[None], axis=-1)
                np.fill_diagonal(gap, np.inf)
                if gap.min() > spacing:
                    pos = cand
                    break
        perm = rng.permutation(n_points)
        frames.append(FramePointCloud(t, pos[perm]))
        identity.append(perm)
    return frames, identity
