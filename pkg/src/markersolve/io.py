"""JSON and JSON-lines readers/writers for every on-disk artifact.

Writers are deterministic: fixed key order, ``repr`` floats (shortest text
that reads back to the same double), ``\\n`` line endings.  Reading a file
and writing it again reproduces it byte for byte.

Schema problems raise :class:`ContractError`; missing or unwritable paths
surface as ``OSError``.
"""

import json
from pathlib import Path

import numpy as np

from .errors import ContractError
from .kinematics import FramePointCloud, MarkerLayout, Motion, Skeleton
from .solver import ArrayPoseProvider


def _dump(obj, indent=None):
    try:
        if indent is None:
            return json.dumps(obj, separators=(",", ":"), allow_nan=False)
        return json.dumps(obj, indent=indent, allow_nan=False)
    except ValueError as e:
        raise ContractError(f"cannot serialize: {e}") from None


def write_json(path, obj):
    Path(path).write_text(_dump(obj, indent=1) + "\n", encoding="utf-8")


def read_json(path):
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ContractError(f"{path}: invalid JSON ({e})") from None


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(_dump(r) + "\n")


def read_jsonl(path):
    out = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as e:
                raise ContractError(f"{path}:{n}: invalid JSON ({e})") from None
    return out


def _get(rec, key, where):
    try:
        return rec[key]
    except (KeyError, TypeError):
        raise ContractError(f"{where}: missing field {key!r}") from None


def _array(value, shape_tail, where):
    try:
        a = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ContractError(f"{where}: expected numbers") from None
    if a.size == 0:
        a = a.reshape((0,) + shape_tail)
    if a.shape[1:] != shape_tail:
        raise ContractError(f"{where}: expected rows of shape {shape_tail}, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ContractError(f"{where}: NaN or inf")
    return a


# core schemas

def skeleton_to_dict(sk: Skeleton):
    return {"joints": [{"name": n, "parent": int(p), "offset": o.tolist()}
                       for n, p, o in zip(sk.names, sk.parents, sk.offsets)]}


def skeleton_from_dict(d):
    joints = _get(d, "joints", "skeleton")
    try:
        names = tuple(str(_get(j, "name", "joint")) for j in joints)
        parents = [int(_get(j, "parent", "joint")) for j in joints]
    except (TypeError, ValueError):
        raise ContractError("skeleton: malformed joints") from None
    offsets = _array([_get(j, "offset", "joint") for j in joints], (3,), "skeleton offsets")
    try:
        return Skeleton(names, np.array(parents, dtype=np.int64), offsets)
    except ValueError as e:
        raise ContractError(f"skeleton: {e}") from None


def layout_to_dict(layout: MarkerLayout, skeleton: Skeleton):
    return {"markers": [{"label": l, "joint": skeleton.names[j], "offset": o.tolist(), "part": p}
                        for l, j, o, p in zip(layout.labels, layout.joints, layout.offsets,
                                              layout.parts)]}


def layout_from_dict(d, skeleton: Skeleton):
    markers = _get(d, "markers", "layout")
    try:
        joints = [skeleton.index(_get(m, "joint", "marker")) for m in markers]
    except (KeyError, ValueError) as e:
        raise ContractError(f"layout: unknown joint ({e})") from None
    offsets = _array([_get(m, "offset", "marker") for m in markers], (3,), "layout offsets")
    try:
        return MarkerLayout(tuple(str(_get(m, "label", "marker")) for m in markers),
                            np.array(joints, dtype=np.int64), offsets,
                            tuple(str(_get(m, "part", "marker")) for m in markers))
    except ValueError as e:
        raise ContractError(f"layout: {e}") from None


def motion_to_dict(motion: Motion):
    T, K = motion.n_frames, motion.n_joints
    rots = motion.rotations.reshape(T, K, 9)
    return {"frame_rate": float(motion.frame_rate),
            "frames": [{"translation": motion.root_translation[t].tolist(),
                        "rotations": rots[t].tolist()} for t in range(T)]}


def motion_from_dict(d, n_joints=None):
    """``n_joints`` sizes an empty motion, which the file alone cannot express."""
    frames = _get(d, "frames", "motion")
    rate = _get(d, "frame_rate", "motion")
    trans = _array([_get(f, "translation", "motion frame") for f in frames], (3,), "translation")
    rots = [_array(_get(f, "rotations", "motion frame"), (9,), "rotations") for f in frames]
    K = rots[0].shape[0] if rots else (n_joints or 0)
    if any(r.shape[0] != K for r in rots) or (n_joints is not None and K != n_joints):
        raise ContractError("motion: joint count varies across frames or mismatches the skeleton")
    rot = np.array(rots).reshape(len(frames), K, 3, 3) if rots else np.zeros((0, K, 3, 3))
    try:
        return Motion(float(rate), trans, rot)
    except ValueError as e:
        raise ContractError(f"motion: {e}") from None


def write_skeleton(path, sk):
    write_json(path, skeleton_to_dict(sk))


def read_skeleton(path):
    return skeleton_from_dict(read_json(path))


def write_layout(path, layout, skeleton):
    write_json(path, layout_to_dict(layout, skeleton))


def read_layout(path, skeleton):
    return layout_from_dict(read_json(path), skeleton)


def write_motion(path, motion):
    write_json(path, motion_to_dict(motion))


def read_motion(path, n_joints=None):
    return motion_from_dict(read_json(path), n_joints)


# per-frame sequences

def write_points(path, frames):
    write_jsonl(path, ({"t": int(f.time_index), "points": f.points.tolist()} for f in frames))


def read_points(path):
    out = []
    for r in read_jsonl(path):
        t = _get(r, "t", "points record")
        out.append(FramePointCloud(int(t), _array(_get(r, "points", f"frame {t}"), (3,), f"frame {t}")))
    return out


def _label_names(labels, names):
    return [None if k < 0 else names[k] for k in np.asarray(labels, dtype=np.int64).tolist()]


def _label_indices(values, names, where):
    lookup = {n: i for i, n in enumerate(names)}
    try:
        return np.array([-1 if v is None else lookup[v] for v in values], dtype=np.int64)
    except (KeyError, TypeError) as e:
        raise ContractError(f"{where}: unknown label {e}") from None


def write_labels(path, frames, labels, names, confidence=None):
    """Per-frame label strings (``null`` for ghost / unlabeled), optionally with confidences."""
    recs = []
    for k, (f, lab) in enumerate(zip(frames, labels)):
        r = {"t": int(f.time_index), "labels": _label_names(lab, names)}
        if confidence is not None:
            r["confidence"] = np.asarray(confidence[k], dtype=float).tolist()
        recs.append(r)
    write_jsonl(path, recs)


def read_labels(path, names):
    """Returns ``(times, labels, confidence_or_None)``."""
    times, labels, conf = [], [], []
    for r in read_jsonl(path):
        t = int(_get(r, "t", "labels record"))
        times.append(t)
        labels.append(_label_indices(_get(r, "labels", f"frame {t}"), names, f"frame {t}"))
        conf.append(np.asarray(r["confidence"], dtype=float) if "confidence" in r else None)
    if any(c is None for c in conf):
        conf = None
    return times, labels, conf


def write_scores(path, frames, scores):
    write_jsonl(path, ({"t": int(f.time_index), "scores": np.asarray(s, dtype=float).tolist()}
                       for f, s in zip(frames, scores)))


def read_scores(path, frames, n_labels):
    """Scores aligned to ``frames`` by time index; every frame must be present."""
    by_t = {}
    for r in read_jsonl(path):
        t = int(_get(r, "t", "scores record"))
        by_t[t] = _array(_get(r, "scores", f"frame {t}"), (n_labels,), f"scores frame {t}")
    out = []
    for f in frames:
        if f.time_index not in by_t:
            raise ContractError(f"scores missing for frame {f.time_index}")
        s = by_t[f.time_index]
        if len(s) != len(f):
            raise ContractError(f"frame {f.time_index}: {len(s)} score rows for {len(f)} points")
        out.append(s)
    return out


def write_pose_estimates(path, provider):
    cs = provider.cos_sin()
    write_jsonl(path, ({"t": t, "positions": provider.positions[t].tolist(),
                        "twist_cos_sin": cs[t].tolist(), "offsets": provider.offsets[t].tolist()}
                       for t in range(provider.n_frames)))


def read_pose_estimates(path):
    recs = read_jsonl(path)
    pos, cs, off = [], [], []
    for k, r in enumerate(recs):
        t = _get(r, "t", "estimate record")
        if t != k:
            raise ContractError(f"estimate records must be consecutive from 0, got t={t} at {k}")
        pos.append(_array(_get(r, "positions", f"frame {t}"), (3,), f"positions frame {t}"))
        cs.append(_array(_get(r, "twist_cos_sin", f"frame {t}"), (2,), f"twist frame {t}"))
        off.append(_array(_get(r, "offsets", f"frame {t}"), (3,), f"offsets frame {t}"))
    if not recs:
        raise ContractError("no pose estimates")
    if len({p.shape for p in pos + off}) != 1:
        raise ContractError("joint count varies across estimate records")
    cs = np.array(cs)
    if np.any(np.hypot(cs[..., 0], cs[..., 1]) == 0.0):
        raise ContractError("twist (cos, sin) of zero length")
    return ArrayPoseProvider.from_cos_sin(np.array(pos), cs, np.array(off))


def write_tracklets(path, dump):
    write_jsonl(path, ({"id": int(d["id"]), "members": [[int(a), int(b)] for a, b in d["members"]],
                        "label": d["label"], "confidence": float(d["confidence"])} for d in dump))


def read_tracklets(path):
    return read_jsonl(path)
