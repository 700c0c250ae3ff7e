"""Pure-numpy implementations of the hot kernels.

Loops run over joints or iterations; frames are vectorized.
"""

import numpy as np

from ..rotation import MIN_BONE_LENGTH, axis_angle_matrix, swing_batch


def forward_kinematics(parents, offsets, root_translation, local_rotations):
    T, K = local_rotations.shape[:2]
    glob = np.empty((T, K, 3, 3))
    pos = np.empty((T, K, 3))
    glob[:, 0] = local_rotations[:, 0]
    pos[:, 0] = root_translation
    for i in range(1, K):
        p = parents[i]
        glob[:, i] = glob[:, p] @ local_rotations[:, i]
        pos[:, i] = pos[:, p] + glob[:, p] @ offsets[i]
    return pos, glob


def _logsumexp(x, axis):
    m = np.max(x, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    return np.squeeze(m, axis=axis) + np.log(np.sum(np.exp(x - m), axis=axis))


def sinkhorn_log(scores, log_row_mass, log_col_mass, iterations):
    u = np.zeros(scores.shape[0])
    v = np.zeros(scores.shape[1])
    for _ in range(iterations):
        u = log_row_mass - _logsumexp(scores + v[None, :], axis=1)
        v = log_col_mass - _logsumexp(scores + u[:, None], axis=0)
    return scores + u[:, None] + v[None, :]


def greedy_merge(node_frame, edge_a, edge_b):
    parent = list(range(len(node_frame)))
    frames = {i: {int(f)} for i, f in enumerate(node_frame)}
    merged = np.zeros(len(edge_a), dtype=bool)

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e, (a, b) in enumerate(zip(edge_a, edge_b)):
        ra, rb = find(int(a)), find(int(b))
        if ra == rb or not frames[ra].isdisjoint(frames[rb]):
            continue
        if len(frames[ra]) < len(frames[rb]) or (len(frames[ra]) == len(frames[rb]) and rb < ra):
            ra, rb = rb, ra
        parent[rb] = ra
        frames[ra] |= frames.pop(rb)
        merged[e] = True
    labels = np.array([find(i) for i in range(len(node_frame))], dtype=np.int64)
    return labels, merged


def _safe_swing(d, t):
    """Swing for rows of ``d``; zero-length estimates fall back to identity."""
    out = np.broadcast_to(np.eye(3), d.shape[:-1] + (3, 3)).copy()
    ok = np.linalg.norm(d, axis=-1) >= MIN_BONE_LENGTH
    if np.any(ok):
        out[ok] = swing_batch(d[ok], np.broadcast_to(t, d.shape)[ok])
    return out


def solve_chain(parents, offsets, primary_child, positions, twists,
                root_rotation, corrected):
    T, K = positions.shape[:2]
    local = np.empty((T, K, 3, 3))
    glob = np.empty((T, K, 3, 3))
    pos = np.empty((T, K, 3))
    local[:, 0] = root_rotation
    glob[:, 0] = root_rotation
    pos[:, 0] = positions[:, 0]
    for i in range(1, K):
        p = parents[i]
        pos[:, i] = pos[:, p] + glob[:, p] @ offsets[i]
        c = primary_child[i]
        if c < 0:
            length = np.linalg.norm(offsets[i])
            if length < MIN_BONE_LENGTH:
                local[:, i] = np.eye(3)
            else:
                local[:, i] = axis_angle_matrix(offsets[i] / length, twists[:, i])
        else:
            base = pos[:, i] if corrected else positions[:, i]
            d = positions[:, c] - base
            d_local = np.einsum("tji,tj->ti", glob[:, p], d)
            t = offsets[c]
            axis = t / np.linalg.norm(t)
            local[:, i] = _safe_swing(d_local, t) @ axis_angle_matrix(axis, twists[:, i])
        glob[:, i] = glob[:, p] @ local[:, i]
    return local
