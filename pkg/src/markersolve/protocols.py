"""Reusable synthetic experiments shared by the CLI and the acceptance tests."""

import numpy as np

from .kinematics import LabeledMarkers, Motion, Skeleton, motion_forward_kinematics
from .labeling import LabelingParams, label_sequence, oracle_scores
from .metrics import labeling_metrics, solving_metrics
from .rotation import rotvec_to_matrix
from .simulate import NoiseConfig, render_markers, simulate
from .solver import ArrayPoseProvider, markers_to_joints, solve_sequence, true_twists

JITTER_LEVELS_CM = (0.0, 0.2, 0.5, 1.0)


def jitter_sweep(skeleton, layout, motion, levels_cm=JITTER_LEVELS_CM, seed=0, modes=("corrected", "naive"),
                 backend=None):
    """MPJPE (cm) per mode and uniform marker jitter level.

    Markers are rendered exactly, jittered uniformly in ``[-l, l]`` per axis,
    turned into joint positions under the true rotations, and solved with the
    true twists and offsets.  The same noise draw is scaled across levels so
    the levels differ only in magnitude.
    """
    markers = render_markers(skeleton, layout, motion)
    unit = np.random.default_rng(seed).uniform(-1.0, 1.0, markers.positions.shape)
    twists = true_twists(skeleton, motion)
    offsets = np.broadcast_to(skeleton.offsets, (motion.n_frames,) + skeleton.offsets.shape)
    out = {m: [] for m in modes}
    for level in levels_cm:
        noisy = LabeledMarkers(markers.positions + 0.01 * level * unit, markers.visibility)
        provider = ArrayPoseProvider(markers_to_joints(skeleton, layout, noisy, motion), twists, offsets)
        for m in modes:
            solved, sk = solve_sequence(provider, skeleton, mode=m, frame_rate=motion.frame_rate,
                                        backend=backend)
            out[m].append(solving_metrics(solved, sk, motion, skeleton).mpjpe)
    return out


def chain_skeleton():
    """Depth-5 chain under a root with two side stubs (so the root is solvable)."""
    names = ("root", "c1", "c2", "c3", "c4", "c5", "stub_a", "stub_b")
    parents = np.array([-1, 0, 1, 2, 3, 4, 0, 0])
    offsets = np.array([[0, 0, 0], [0, 0.3, 0], [0, 0.3, 0], [0, 0.25, 0], [0, 0.25, 0],
                        [0, 0.2, 0], [0.1, 0, 0], [0, 0, 0.1]], dtype=float)
    return Skeleton(names, parents, offsets)


def error_accumulation_trials(n_trials=1000, seed=0, perturb_m=0.01, max_angle=np.deg2rad(60.0),
                              backend=None):
    """End-effector error (m) of both modes when one mid-chain estimate is off by ``perturb_m``.

    Each trial draws a random pose, perturbs joint c2 or c3 in a random
    direction, and solves the single frame both ways.  Returns
    ``(corrected_errors, naive_errors)``.
    """
    sk = chain_skeleton()
    rng = np.random.default_rng(seed)
    K, end = sk.n_joints, sk.index("c5")
    rv = rng.normal(size=(n_trials, K, 3))
    rv *= (rng.uniform(0, max_angle, (n_trials, K)) / np.linalg.norm(rv, axis=-1))[..., None]
    motion = Motion(1.0, rng.normal(size=(n_trials, 3)), rotvec_to_matrix(rv))
    pos, _ = motion_forward_kinematics(sk, motion)
    d = rng.normal(size=(n_trials, 3))
    d *= perturb_m / np.linalg.norm(d, axis=1, keepdims=True)
    joint = rng.choice([sk.index("c2"), sk.index("c3")], n_trials)
    est = pos.copy()
    est[np.arange(n_trials), joint] += d
    provider = ArrayPoseProvider(est, true_twists(sk, motion), np.broadcast_to(sk.offsets, (n_trials, K, 3)))
    errs = []
    for mode in ("corrected", "naive"):
        solved, solved_sk = solve_sequence(provider, sk, mode=mode, backend=backend)
        p, _ = motion_forward_kinematics(solved_sk, solved)
        errs.append(np.linalg.norm(p[:, end] - pos[:, end], axis=-1))
    return errs[0], errs[1]


NOISY_FIXTURE = dict(preset="hand16", duration_s=4.0, frame_rate=60.0, occlusion=0.06, ghost_rate=0.5,
                     signal=4.0, noise=1.0, temperature=1.0)


def tracklet_ablation(seed=0, params=None, **overrides):
    """Labeling F1 with and without the tracklet stage on the standard noisy fixture.

    Returns ``(f1_tracklets, f1_framewise)``.
    """
    cfg = dict(NOISY_FIXTURE, **overrides)
    noise = NoiseConfig.uniform_occlusion(cfg["occlusion"], ghost_rate=cfg["ghost_rate"], shuffle=True,
                                          seed=seed)
    frames, truth = simulate(cfg["preset"], cfg["duration_s"], cfg["frame_rate"], noise, seed=seed)
    scores, feats = oracle_scores(frames, truth.correspondence, truth.layout.n_markers, cfg["signal"],
                                  cfg["noise"], cfg["temperature"], seed=seed)
    params = params or LabelingParams()
    out = []
    for use in (True, False):
        p = LabelingParams(**{**params.__dict__, "use_tracklets": use})
        res = label_sequence(frames, scores, feats, p)
        out.append(labeling_metrics(res.labels, truth.correspondence).f1)
    return out[0], out[1]
