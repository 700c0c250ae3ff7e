"""Sequence labeling: score providers, frame-wise assignment and tracklet association.

A score provider yields, per frame, an ``(n, N)`` matrix of label log-scores
and an ``(n, D)`` matrix of point features used for tracklet edges.
"""

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .assignment import (DEFAULT_ACCEPT_THRESHOLD, DEFAULT_DUSTBIN, DEFAULT_ITERATIONS,
                         augment_scores, extract_labels, sinkhorn_normalize)
from .kinematics import FramePointCloud, MarkerLayout, Motion, Skeleton, motion_forward_kinematics
from .tracklet import (DEFAULT_LAMBDA_FET, DEFAULT_MAX_FRAME_GAP, DEFAULT_Q, DEFAULT_TH_FET,
                       DEFAULT_TH_POS, DEFAULT_WINDOW, assign_tracklet_labels, baseline_features,
                       build_graph, greedy_cluster)

BASELINE_SCALE = 0.05  # meters, width of the distance kernel of the baseline scores


@dataclass
class LabelingParams:
    iterations: int = DEFAULT_ITERATIONS
    dustbin_score: float = DEFAULT_DUSTBIN
    accept_threshold: float = DEFAULT_ACCEPT_THRESHOLD
    use_tracklets: bool = True
    window: int = DEFAULT_WINDOW
    max_frame_gap: int = DEFAULT_MAX_FRAME_GAP
    th_pos: float = DEFAULT_TH_POS
    th_fet: float = DEFAULT_TH_FET
    lambda_fet: float = DEFAULT_LAMBDA_FET
    q: float = DEFAULT_Q


@dataclass
class LabelingResult:
    labels: list                 # per frame, label index or -1
    confidence: list             # per frame, per point
    tracklets: list = field(default_factory=list)  # dicts for the debug dump


def oracle_scores(frames: Sequence[FramePointCloud], correspondence, n_labels, signal=4.0,
                  noise=1.0, temperature=1.0, seed=0):
    """Noisy stand-in for learned scores built from the true correspondence.

    ``logit[i, j] = (signal * [label(i) == j] + noise * eps_ij) / temperature``
    with standard normal ``eps``; ghosts carry noise only.  The logit rows
    double as point features.
    """
    rng = np.random.default_rng(seed)
    scores = []
    for f, corr in zip(frames, correspondence):
        n = len(f)
        s = noise * rng.standard_normal((n, n_labels))
        real = np.flatnonzero(np.asarray(corr) >= 0)
        s[real, np.asarray(corr)[real]] += signal
        scores.append(s / temperature)
    return scores, [s.copy() for s in scores]


def baseline_scores(frames: Sequence[FramePointCloud], skeleton: Skeleton, layout: MarkerLayout):
    """Geometric stand-in: distances to the rest-pose marker template after
    centroid alignment, as Gaussian log-scores.  Ignores pose entirely."""
    K = skeleton.n_joints
    rest = Motion(1.0, np.zeros((1, 3)), np.broadcast_to(np.eye(3), (1, K, 3, 3)))
    pos, _ = motion_forward_kinematics(skeleton, rest)
    template = pos[0, layout.joints] + layout.offsets
    template = template - template.mean(axis=0)
    scores = []
    for f in frames:
        if len(f) == 0:
            scores.append(np.zeros((0, layout.n_markers)))
            continue
        pts = f.points - f.points.mean(axis=0)
        d2 = ((pts[:, None] - template[None]) ** 2).sum(-1)
        scores.append(-d2 / (2.0 * BASELINE_SCALE ** 2))
    return scores, baseline_features(frames)


def _windows(frames, size):
    if not frames:
        return []
    t0 = frames[0].time_index
    groups = {}
    for k, f in enumerate(frames):
        groups.setdefault((f.time_index - t0) // size, []).append(k)
    return list(groups.values())


def label_sequence(frames: Sequence[FramePointCloud], scores, features, params: LabelingParams):
    """Label every point of every frame.

    Frame-wise mode discretizes each Sinkhorn-normalized frame on its own;
    tracklet mode clusters each window into tracklets and labels them jointly.
    """
    n_labels = None
    conf = []
    for f, s in zip(frames, scores):
        s = np.asarray(s, dtype=float).reshape(len(f), -1)
        if n_labels is None:
            n_labels = s.shape[1]
        elif s.shape[1] != n_labels:
            raise ValueError(f"frame {f.time_index}: expected {n_labels} label columns")
        conf.append(sinkhorn_normalize(augment_scores(s, params.dustbin_score), params.iterations))

    if not params.use_tracklets:
        labs = [extract_labels(c, params.accept_threshold) for c in conf]
        return LabelingResult([l.labels for l in labs], [l.confidence for l in labs])

    labels = [None] * len(frames)
    confidence = [None] * len(frames)
    dump = []
    next_id = 0
    for idx in _windows(list(frames), params.window):
        win = [frames[k] for k in idx]
        graph = build_graph(win, [features[k] for k in idx], params.lambda_fet, params.th_pos,
                            params.th_fet, params.max_frame_gap)
        tracklets = greedy_cluster(graph)
        cmap = {frames[k].time_index: conf[k] for k in idx}
        lab, assignment = assign_tracklet_labels(tracklets, cmap, params.q)
        for k in idx:
            t = frames[k].time_index
            labels[k] = lab[t]
            # each point reports its own normalized confidence for the chosen column
            confidence[k] = cmap[t].scores[np.arange(len(frames[k])), lab[t]]
        for tr in tracklets:
            label, score = assignment[tr.id]
            dump.append({"id": next_id + tr.id, "members": [list(m) for m in tr.members],
                         "label": int(label), "confidence": float(score)})
        next_id += len(tracklets)
    return LabelingResult(labels, confidence, dump)


def labeled_markers_from_points(frames: Sequence[FramePointCloud], labels, n_labels):
    """Scatter labeled points into ``(T, N, 3)`` positions and a visibility mask."""
    T = len(frames)
    pos = np.zeros((T, n_labels, 3))
    vis = np.zeros((T, n_labels), dtype=bool)
    for t, (f, lab) in enumerate(zip(frames, labels)):
        ok = np.asarray(lab) >= 0
        pos[t, lab[ok]] = f.points[ok]
        vis[t, lab[ok]] = True
    return pos, vis
