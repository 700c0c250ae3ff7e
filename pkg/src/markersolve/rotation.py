"""Batched rotation-matrix algebra on numpy arrays.

All functions accept a leading batch shape and operate on the trailing
``(3,)`` / ``(3, 3)`` axes.  Rotations are stored as row-major 3x3 matrices.
"""

import numpy as np

from .errors import DegenerateGeometryError

# Directions shorter than this are treated as zero-length bones (meters).
MIN_BONE_LENGTH = 1e-12
# sin(angle) below which a negative-dot pair counts as anti-parallel.
ANTIPARALLEL_TOL = 1e-7


def skew(v):
    """Cross-product matrix ``[v]_x`` for a batch of 3-vectors."""
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape[:-1] + (3, 3))
    out[..., 0, 1] = -v[..., 2]
    out[..., 0, 2] = v[..., 1]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 2] = -v[..., 0]
    out[..., 2, 0] = -v[..., 1]
    out[..., 2, 1] = v[..., 0]
    return out


def vee(m):
    """Axial vector of the antisymmetric part of ``m`` (times 2)."""
    return np.stack([m[..., 2, 1] - m[..., 1, 2],
                     m[..., 0, 2] - m[..., 2, 0],
                     m[..., 1, 0] - m[..., 0, 1]], axis=-1)


def axis_angle_matrix(axis, angle):
    """Rodrigues rotation about unit ``axis`` by ``angle`` radians."""
    axis = np.asarray(axis, dtype=float)
    angle = np.asarray(angle, dtype=float)
    k = skew(axis)
    s = np.sin(angle)[..., None, None]
    c = np.cos(angle)[..., None, None]
    return np.eye(3) + s * k + (1.0 - c) * (k @ k)


def rotvec_to_matrix(rotvec):
    """Exponential map from rotation vectors to matrices."""
    rotvec = np.asarray(rotvec, dtype=float)
    theta = np.linalg.norm(rotvec, axis=-1)
    safe = np.where(theta > 0, theta, 1.0)
    axis = rotvec / safe[..., None]
    return axis_angle_matrix(axis, theta)


def perpendicular_axis(v):
    """Deterministic unit vector perpendicular to ``v``.

    Takes the first nonzero component ``i`` of ``v`` and the next index
    ``j = (i + 1) % 3``, then returns ``e_j * v_i - e_i * v_j`` normalized.
    """
    v = np.asarray(v, dtype=float)
    nz = np.flatnonzero(v)
    if nz.size == 0:
        raise DegenerateGeometryError("degenerate bone")
    i = int(nz[0])
    j = (i + 1) % 3
    out = np.zeros(3)
    out[i] = -v[j]
    out[j] = v[i]
    return out / np.linalg.norm(out)


def _unit(v):
    n = np.linalg.norm(v, axis=-1)
    if np.any(n < MIN_BONE_LENGTH):
        raise DegenerateGeometryError("degenerate bone")
    return v / n[..., None]


def swing_batch(estimated, template):
    """Minimal rotations carrying each ``template`` direction onto ``estimated``.

    Both inputs are ``(M, 3)``.  Uses ``I + sin(a)[n]x + (1 - cos(a))[n]x^2``
    with ``n`` the normalized ``template x estimated``.  Anti-parallel pairs
    get a half turn about :func:`perpendicular_axis` of the template.
    """
    j = _unit(np.atleast_2d(np.asarray(estimated, dtype=float)))
    t = _unit(np.atleast_2d(np.asarray(template, dtype=float)))
    j, t = np.broadcast_arrays(j, t)
    c = np.cross(t, j)
    cos_a = np.einsum("...i,...i->...", t, j)
    sin_a = np.linalg.norm(c, axis=-1)
    kc = skew(c)
    eye = np.broadcast_to(np.eye(3), kc.shape)

    out = np.empty(kc.shape)
    # cos >= 0: I + [c] + [c]^2 / (1 + cos) avoids dividing by |c| near 0
    pos = cos_a >= 0
    if np.any(pos):
        out[pos] = eye[pos] + kc[pos] + (kc[pos] @ kc[pos]) / (1.0 + cos_a[pos])[:, None, None]
    neg = ~pos & (sin_a >= ANTIPARALLEL_TOL)
    if np.any(neg):
        kn = kc[neg] / sin_a[neg][:, None, None]
        out[neg] = eye[neg] + kc[neg] + (1.0 - cos_a[neg])[:, None, None] * (kn @ kn)
    anti = ~pos & ~neg
    for idx in np.flatnonzero(anti):
        u = perpendicular_axis(t[idx])
        out[idx] = 2.0 * np.outer(u, u) - np.eye(3)
    return out


def twist_angle_about(rotation, axis):
    """Angle of a rotation that fixes ``axis`` (rotation about ``axis``)."""
    s = 0.5 * np.einsum("...i,...i->...", vee(rotation), axis)
    c = 0.5 * (np.trace(rotation, axis1=-2, axis2=-1) - 1.0)
    return wrap_angle(np.arctan2(s, c))


def wrap_angle(a):
    """Wrap radians into (-pi, pi]."""
    a = np.asarray(a, dtype=float)
    out = np.mod(a + np.pi, 2.0 * np.pi) - np.pi
    return np.where(out <= -np.pi, out + 2.0 * np.pi, out)


def geodesic_batch(a, b):
    """Geodesic distance on SO(3) between matching rotations.

    Equal to ``arccos((tr(a^T b) - 1) / 2)`` but evaluated with ``atan2``,
    which keeps precision for angles near 0 and pi.
    """
    r = np.swapaxes(a, -1, -2) @ b
    c = 0.5 * (np.trace(r, axis1=-2, axis2=-1) - 1.0)
    s = 0.5 * np.linalg.norm(vee(r), axis=-1)
    return np.arctan2(s, np.clip(c, -1.0, 1.0))


def kabsch_batch(source, target):
    """Proper rotations minimizing ``sum |R (s - s_mean) - (t - t_mean)|^2``.

    ``source`` and ``target`` are ``(..., P, 3)``.  Returns ``(rotations,
    second_singular_ratio)`` so callers can reject rank-deficient inputs.
    """
    s = source - source.mean(axis=-2, keepdims=True)
    t = target - target.mean(axis=-2, keepdims=True)
    h = np.swapaxes(s, -1, -2) @ t
    u, sig, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(np.swapaxes(vt, -1, -2) @ np.swapaxes(u, -1, -2)))
    d = np.where(d == 0, 1.0, d)
    dmat = np.zeros(h.shape)
    dmat[..., 0, 0] = 1.0
    dmat[..., 1, 1] = 1.0
    dmat[..., 2, 2] = d
    r = np.swapaxes(vt, -1, -2) @ dmat @ np.swapaxes(u, -1, -2)
    ratio = sig[..., 1] / np.maximum(sig[..., 0], np.finfo(float).tiny)
    return r, ratio


def is_rotation(m, tol=1e-6):
    m = np.asarray(m, dtype=float)
    if m.shape[-2:] != (3, 3) or not np.all(np.isfinite(m)):
        return False
    err = np.abs(np.swapaxes(m, -1, -2) @ m - np.eye(3)).max()
    det = np.linalg.det(m)
    return bool(err <= tol and np.all(np.abs(det - 1.0) <= tol))


def twist_batch(rotations, axes):
    """Twist angles of ``rotations`` about unit ``axes`` (swing-twist split)."""
    moved = np.einsum("...ij,...j->...i", rotations, axes)
    swing = swing_batch(moved.reshape(-1, 3), np.broadcast_to(axes, moved.shape).reshape(-1, 3))
    swing = swing.reshape(moved.shape + (3,))
    return twist_angle_about(np.swapaxes(swing, -1, -2) @ rotations, axes)
