"""Numba implementations of the hot kernels.

Explicit loops over frames, joints and matrix entries; 3x3 algebra is
inlined rather than routed through BLAS.
"""

import numpy as np
from numba import njit

from ..rotation import ANTIPARALLEL_TOL, MIN_BONE_LENGTH

_OPTS = dict(cache=True, nogil=True)


@njit(**_OPTS)
def _mm(a, b, out):
    for r in range(3):
        for c in range(3):
            out[r, c] = a[r, 0] * b[0, c] + a[r, 1] * b[1, c] + a[r, 2] * b[2, c]


@njit(**_OPTS)
def _mv(a, v, out):
    for r in range(3):
        out[r] = a[r, 0] * v[0] + a[r, 1] * v[1] + a[r, 2] * v[2]


@njit(**_OPTS)
def _mtv(a, v, out):
    for r in range(3):
        out[r] = a[0, r] * v[0] + a[1, r] * v[1] + a[2, r] * v[2]


@njit(**_OPTS)
def _norm(v):
    return np.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])


@njit(**_OPTS)
def _axis_angle(axis, angle, out):
    s = np.sin(angle)
    c = np.cos(angle)
    x, y, z = axis[0], axis[1], axis[2]
    C = 1.0 - c
    out[0, 0] = c + x * x * C
    out[0, 1] = x * y * C - z * s
    out[0, 2] = x * z * C + y * s
    out[1, 0] = y * x * C + z * s
    out[1, 1] = c + y * y * C
    out[1, 2] = y * z * C - x * s
    out[2, 0] = z * x * C - y * s
    out[2, 1] = z * y * C + x * s
    out[2, 2] = c + z * z * C


@njit(**_OPTS)
def _skew(v, out):
    out[0, 0] = 0.0
    out[0, 1] = -v[2]
    out[0, 2] = v[1]
    out[1, 0] = v[2]
    out[1, 1] = 0.0
    out[1, 2] = -v[0]
    out[2, 0] = -v[1]
    out[2, 1] = v[0]
    out[2, 2] = 0.0


@njit(**_OPTS)
def _swing(est, tmpl, out):
    """Same construction as ``rotation.swing_batch``; zero ``est`` gives identity."""
    ne = _norm(est)
    nt = _norm(tmpl)
    for r in range(3):
        for c in range(3):
            out[r, c] = 1.0 if r == c else 0.0
    if ne < MIN_BONE_LENGTH or nt < MIN_BONE_LENGTH:
        return
    j = est / ne
    t = tmpl / nt
    cr = np.empty(3)
    cr[0] = t[1] * j[2] - t[2] * j[1]
    cr[1] = t[2] * j[0] - t[0] * j[2]
    cr[2] = t[0] * j[1] - t[1] * j[0]
    cos_a = t[0] * j[0] + t[1] * j[1] + t[2] * j[2]
    sin_a = _norm(cr)
    k = np.empty((3, 3))
    k2 = np.empty((3, 3))
    if cos_a >= 0.0:
        _skew(cr, k)
        _mm(k, k, k2)
        f = 1.0 / (1.0 + cos_a)
        for r in range(3):
            for c in range(3):
                out[r, c] += k[r, c] + k2[r, c] * f
    elif sin_a >= ANTIPARALLEL_TOL:
        _skew(cr, k)
        kn = k / sin_a
        _mm(kn, kn, k2)
        f = 1.0 - cos_a
        for r in range(3):
            for c in range(3):
                out[r, c] += k[r, c] + k2[r, c] * f
    else:
        i = 0
        while t[i] == 0.0:
            i += 1
        jj = (i + 1) % 3
        u = np.zeros(3)
        u[i] = -t[jj]
        u[jj] = t[i]
        u /= _norm(u)
        for r in range(3):
            for c in range(3):
                out[r, c] = 2.0 * u[r] * u[c] - (1.0 if r == c else 0.0)


@njit(**_OPTS)
def forward_kinematics(parents, offsets, root_translation, local_rotations):
    T, K = local_rotations.shape[0], local_rotations.shape[1]
    glob = np.empty((T, K, 3, 3))
    pos = np.empty((T, K, 3))
    tmp = np.empty(3)
    for f in range(T):
        glob[f, 0] = local_rotations[f, 0]
        pos[f, 0] = root_translation[f]
        for i in range(1, K):
            p = parents[i]
            _mm(glob[f, p], local_rotations[f, i], glob[f, i])
            _mv(glob[f, p], offsets[i], tmp)
            for d in range(3):
                pos[f, i, d] = pos[f, p, d] + tmp[d]
    return pos, glob


@njit(**_OPTS)
def sinkhorn_log(scores, log_row_mass, log_col_mass, iterations):
    n, m = scores.shape
    u = np.zeros(n)
    v = np.zeros(m)
    for _ in range(iterations):
        for i in range(n):
            mx = -np.inf
            for j in range(m):
                x = scores[i, j] + v[j]
                if x > mx:
                    mx = x
            if not np.isfinite(mx):
                mx = 0.0
            acc = 0.0
            for j in range(m):
                acc += np.exp(scores[i, j] + v[j] - mx)
            u[i] = log_row_mass[i] - (mx + np.log(acc))
        for j in range(m):
            mx = -np.inf
            for i in range(n):
                x = scores[i, j] + u[i]
                if x > mx:
                    mx = x
            if not np.isfinite(mx):
                mx = 0.0
            acc = 0.0
            for i in range(n):
                acc += np.exp(scores[i, j] + u[i] - mx)
            v[j] = log_col_mass[j] - (mx + np.log(acc))
    out = np.empty((n, m))
    for i in range(n):
        for j in range(m):
            out[i, j] = scores[i, j] + u[i] + v[j]
    return out


@njit(**_OPTS)
def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@njit(**_OPTS)
def greedy_merge(node_frame, edge_a, edge_b):
    V = node_frame.shape[0]
    n_frames = 0
    for i in range(V):
        if node_frame[i] + 1 > n_frames:
            n_frames = node_frame[i] + 1
    parent = np.arange(V)
    size = np.ones(V, dtype=np.int64)
    head = np.arange(V)
    nxt = -np.ones(V, dtype=np.int64)
    tail = np.arange(V)
    mark = np.zeros(n_frames, dtype=np.bool_)
    merged = np.zeros(edge_a.shape[0], dtype=np.bool_)
    for e in range(edge_a.shape[0]):
        ra = _find(parent, edge_a[e])
        rb = _find(parent, edge_b[e])
        if ra == rb:
            continue
        x = head[ra]
        while x >= 0:
            mark[node_frame[x]] = True
            x = nxt[x]
        ok = True
        x = head[rb]
        while x >= 0:
            if mark[node_frame[x]]:
                ok = False
                break
            x = nxt[x]
        x = head[ra]
        while x >= 0:
            mark[node_frame[x]] = False
            x = nxt[x]
        if not ok:
            continue
        if size[ra] < size[rb] or (size[ra] == size[rb] and rb < ra):
            ra, rb = rb, ra
        parent[rb] = ra
        size[ra] += size[rb]
        nxt[tail[ra]] = head[rb]
        tail[ra] = tail[rb]
        merged[e] = True
    labels = np.empty(V, dtype=np.int64)
    for i in range(V):
        labels[i] = _find(parent, i)
    return labels, merged


@njit(**_OPTS)
def solve_chain(parents, offsets, primary_child, positions, twists,
                root_rotation, corrected):
    T, K = positions.shape[0], positions.shape[1]
    local = np.empty((T, K, 3, 3))
    glob = np.empty((K, 3, 3))
    pos = np.empty((K, 3))
    tmp = np.empty(3)
    d = np.empty(3)
    d_local = np.empty(3)
    axis = np.empty(3)
    sw = np.empty((3, 3))
    tw = np.empty((3, 3))
    for f in range(T):
        local[f, 0] = root_rotation[f]
        glob[0] = root_rotation[f]
        pos[0] = positions[f, 0]
        for i in range(1, K):
            p = parents[i]
            _mv(glob[p], offsets[i], tmp)
            for k in range(3):
                pos[i, k] = pos[p, k] + tmp[k]
            c = primary_child[i]
            if c < 0:
                length = _norm(offsets[i])
                if length < MIN_BONE_LENGTH:
                    for r in range(3):
                        for q in range(3):
                            local[f, i, r, q] = 1.0 if r == q else 0.0
                else:
                    for k in range(3):
                        axis[k] = offsets[i, k] / length
                    _axis_angle(axis, twists[f, i], local[f, i])
            else:
                for k in range(3):
                    base = pos[i, k] if corrected else positions[f, i, k]
                    d[k] = positions[f, c, k] - base
                _mtv(glob[p], d, d_local)
                length = _norm(offsets[c])
                for k in range(3):
                    axis[k] = offsets[c, k] / length
                _swing(d_local, offsets[c], sw)
                _axis_angle(axis, twists[f, i], tw)
                _mm(sw, tw, local[f, i])
            _mm(glob[p], local[f, i], glob[i])
    return local
