"""Tracklets: K-partite marker graphs, greedy clustering and label association."""

import logging
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .assignment import NULL, ConfidenceMatrix
from .kinematics import FramePointCloud

log = logging.getLogger(__name__)

DEFAULT_LAMBDA_FET = 0.1
DEFAULT_TH_POS = 0.05
DEFAULT_TH_FET = 0.5
DEFAULT_MAX_FRAME_GAP = 3
DEFAULT_WINDOW = 30
DEFAULT_Q = 1.0
# Filler for missing nearest-neighbor slots in sparse frames (meters).
NEIGHBOR_SENTINEL = 1.0
N_NEIGHBORS = 4
FEATURE_DIM = N_NEIGHBORS + 2


@dataclass(frozen=True, eq=False)
class MarkerGraph:
    """Nodes are ``(time_index, point_index)`` in lexicographic order.

    Edge arrays index into ``nodes`` with ``edge_a < edge_b``.
    """

    nodes: list
    edge_a: np.ndarray
    edge_b: np.ndarray
    weights: np.ndarray
    w_pos: np.ndarray
    w_fet: np.ndarray
    window: tuple

    @property
    def n_edges(self):
        return len(self.weights)


@dataclass(frozen=True)
class Tracklet:
    id: int
    members: tuple  # ((time_index, point_index), ...) sorted by time

    @property
    def frames(self):
        return frozenset(f for f, _ in self.members)

    def __len__(self):
        return len(self.members)


def _cosine_distance(fa, fb):
    """Pairwise ``1 - cos`` between rows of ``fa`` and ``fb``; zero rows give 1."""
    na = np.linalg.norm(fa, axis=-1)
    nb = np.linalg.norm(fb, axis=-1)
    ok = (na[:, None] > 0) & (nb[None, :] > 0)
    dots = fa @ fb.T
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = np.where(ok, dots / (na[:, None] * nb[None, :]), 0.0)
    if not ok.all():
        log.debug("zero feature vector: cosine distance set to 1")
    return 1.0 - np.clip(cos, -1.0, 1.0)


def edge_weight(pos_a, pos_b, feat_a, feat_b, lambda_fet=DEFAULT_LAMBDA_FET):
    """``(total, w_pos, w_fet)`` for one candidate edge."""
    if lambda_fet < 0:
        raise ValueError("lambda_fet must be non-negative")
    w_pos = float(np.linalg.norm(np.asarray(pos_a, float) - np.asarray(pos_b, float)))
    w_fet = float(_cosine_distance(np.asarray(feat_a, float)[None], np.asarray(feat_b, float)[None])[0, 0])
    return w_pos + lambda_fet * w_fet, w_pos, w_fet


def build_graph(frames: Sequence[FramePointCloud], features, lambda_fet=DEFAULT_LAMBDA_FET,
                th_pos=DEFAULT_TH_POS, th_fet=DEFAULT_TH_FET,
                max_frame_gap=DEFAULT_MAX_FRAME_GAP) -> MarkerGraph:
    times = [f.time_index for f in frames]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("frames must be sorted by strictly increasing time")
    if len(features) != len(frames):
        raise ValueError("one feature array per frame is required")
    nodes = []
    start = []
    for f in frames:
        start.append(len(nodes))
        nodes.extend((f.time_index, m) for m in range(len(f)))

    ea, eb, wt, wp, wf = [], [], [], [], []
    for i, fi in enumerate(frames):
        for j in range(i + 1, len(frames)):
            fj = frames[j]
            if fj.time_index - fi.time_index > max_frame_gap:
                break
            if len(fi) == 0 or len(fj) == 0:
                continue
            d = np.linalg.norm(fi.points[:, None, :] - fj.points[None, :, :], axis=-1)
            c = _cosine_distance(np.asarray(features[i], float), np.asarray(features[j], float))
            m, n = np.nonzero((d <= th_pos) & (c <= th_fet))
            ea.append(start[i] + m)
            eb.append(start[j] + n)
            wp.append(d[m, n])
            wf.append(c[m, n])
            wt.append(d[m, n] + lambda_fet * c[m, n])

    def cat(parts, dtype):
        return np.concatenate(parts).astype(dtype) if parts else np.zeros(0, dtype)

    window = (times[0], times[-1] + 1) if times else (0, 0)
    return MarkerGraph(nodes, cat(ea, np.int64), cat(eb, np.int64), cat(wt, float),
                       cat(wp, float), cat(wf, float), window)


def greedy_cluster(graph: MarkerGraph, return_weight=False, backend=None):
    """Merge clusters along edges of increasing weight while each keeps one node per frame.

    Ties in weight are broken by the lexicographic order of the endpoints.
    With ``return_weight`` the summed weight of the merging edges is returned
    as well.
    """
    V = len(graph.nodes)
    if V == 0:
        return ([], 0.0) if return_weight else []
    order = np.lexsort((graph.edge_b, graph.edge_a, graph.weights))
    _, compact = np.unique([f for f, _ in graph.nodes], return_inverse=True)
    roots, merged = kernels.greedy_merge(compact, graph.edge_a[order], graph.edge_b[order],
                                         backend=backend)
    groups = {}
    for node, r in enumerate(roots):
        groups.setdefault(int(r), []).append(node)
    clusters = sorted(groups.values(), key=lambda g: g[0])
    tracklets = [Tracklet(k, tuple(graph.nodes[n] for n in g)) for k, g in enumerate(clusters)]
    if return_weight:
        return tracklets, float(graph.weights[order][merged].sum())
    return tracklets


def _member_rows(tracklet, confidences):
    return np.array([confidences[f].scores[p] for f, p in tracklet.members])


def tracklet_scores(tracklet: Tracklet, confidences: Mapping[int, ConfidenceMatrix], q=DEFAULT_Q):
    """L-q aggregate over members for every label column, dustbin last."""
    if len(tracklet) == 0:
        raise ValueError("empty tracklet")
    if q < 0:
        raise ValueError("q must be non-negative")
    rows = _member_rows(tracklet, confidences)
    if q == 0:
        # voting: members whose strongest column is the label
        return np.bincount(rows.argmax(axis=1), minlength=rows.shape[1]).astype(float)
    return (np.abs(rows) ** q).sum(axis=0) ** (1.0 / q)


def tracklet_label_confidence(tracklet, confidences, label, q=DEFAULT_Q):
    return float(tracklet_scores(tracklet, confidences, q)[label])


def assign_tracklet_labels(tracklets: Sequence[Tracklet], confidences, q=DEFAULT_Q):
    """Give each tracklet one label; time-overlapping tracklets never share one.

    Candidate (tracklet, label) pairs beating the tracklet's dustbin score
    are taken greedily by descending score (ties by tracklet id, then label).
    A tracklet whose candidates are all blocked stays null.

    Returns ``(labels, assignment)``: ``labels`` maps time index to a per-point
    label array, ``assignment`` maps tracklet id to ``(label, score)``.
    """
    cand = []
    scores = {}
    for tr in tracklets:
        s = tracklet_scores(tr, confidences, q)
        scores[tr.id] = s
        dust = s[-1]
        for j in np.flatnonzero(s[:-1] > dust):
            cand.append((-s[j], tr.id, int(j)))
    cand.sort()
    by_id = {tr.id: tr for tr in tracklets}
    used = {}
    assignment = {tr.id: (NULL, float(scores[tr.id][-1])) for tr in tracklets}
    done = set()
    for neg, tid, j in cand:
        if tid in done:
            continue
        frames = by_id[tid].frames
        taken = used.setdefault(j, set())
        if taken.isdisjoint(frames):
            taken |= frames
            assignment[tid] = (j, -neg)
            done.add(tid)

    labels = {t: np.full(confidences[t].n_points, NULL, dtype=np.int64) for t in confidences}
    for tr in tracklets:
        lab = assignment[tr.id][0]
        for f, p in tr.members:
            labels[f][p] = lab
    return labels, assignment


def baseline_features(frames: Sequence[FramePointCloud], window=None):
    """Per-point geometric descriptor of dimension 6.

    Sorted distances to the 4 nearest in-frame neighbors (``NEIGHBOR_SENTINEL``
    where fewer exist), height above the frame centroid along +y, and distance
    to the centroid.  Translation invariant and weak by design.
    """
    if window is not None:
        frames = [f for f in frames if window[0] <= f.time_index < window[1]]
    out = []
    for f in frames:
        pts = f.points
        n = len(pts)
        feat = np.full((n, FEATURE_DIM), NEIGHBOR_SENTINEL)
        if n:
            c = pts.mean(axis=0)
            d = np.linalg.norm(pts[:, None] - pts[None], axis=-1)
            np.fill_diagonal(d, np.inf)
            k = min(N_NEIGHBORS, n - 1)
            if k > 0:
                feat[:, :k] = np.sort(d, axis=1)[:, :k]
            feat[:, N_NEIGHBORS] = pts[:, 1] - c[1]
            feat[:, N_NEIGHBORS + 1] = np.linalg.norm(pts - c, axis=1)
        out.append(feat)
    return out


def check_constraints(tracklets: Sequence[Tracklet], graph: MarkerGraph = None):
    """True when every tracklet has at most one member per frame and, given
    the graph, every node appears in exactly one tracklet."""
    for tr in tracklets:
        if len(tr.frames) != len(tr.members):
            return False
    if graph is not None:
        seen = [m for tr in tracklets for m in tr.members]
        if len(seen) != len(graph.nodes) or set(seen) != set(graph.nodes):
            return False
    return True
