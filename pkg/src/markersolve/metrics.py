"""Labeling and solving scores against simulation ground truth."""

from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ContractError
from .kinematics import Motion, Skeleton, motion_forward_kinematics
from .rotation import geodesic_batch

NULL = -1


@dataclass
class Confusion:
    hits: int = 0            # true label predicted
    swaps: int = 0           # a different valid label predicted
    false_null: int = 0      # real marker predicted null
    ghost_accepted: int = 0  # ghost given a valid label
    ghost_rejected: int = 0  # ghost predicted null

    @property
    def total(self):
        return self.hits + self.swaps + self.false_null + self.ghost_accepted + self.ghost_rejected

    def add(self, other):
        for k in asdict(self):
            setattr(self, k, getattr(self, k) + getattr(other, k))

    @property
    def accuracy(self):
        """Correct decisions over all points, ghosts and nulls included."""
        return (self.hits + self.ghost_rejected) / self.total if self.total else 1.0

    @property
    def marker_accuracy(self):
        """Correct labels over real markers only (ghosts left out of the denominator)."""
        n = self.hits + self.swaps + self.false_null
        return self.hits / n if n else 1.0

    @property
    def f1(self):
        """Micro F1 with valid labels as the positive class.

        A swap is both a false positive and a false negative.
        """
        fp = self.swaps + self.ghost_accepted
        fn = self.swaps + self.false_null
        denom = 2 * self.hits + fp + fn
        return 2 * self.hits / denom if denom else 1.0


@dataclass
class LabelingReport:
    f1: float
    accuracy: float
    marker_accuracy: float
    confusion: Confusion
    per_part: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "f1": self.f1,
            "accuracy": self.accuracy,
            "marker_accuracy": self.marker_accuracy,
            "confusion": asdict(self.confusion),
            "per_part": {k: {"f1": c.f1, "accuracy": c.accuracy, "confusion": asdict(c)}
                         for k, c in self.per_part.items()},
        }


def _classify(pred, truth):
    c = Confusion()
    is_ghost = truth == NULL
    is_null = pred == NULL
    c.hits = int(np.sum(~is_ghost & (pred == truth)))
    c.false_null = int(np.sum(~is_ghost & is_null))
    c.swaps = int(np.sum(~is_ghost & ~is_null & (pred != truth)))
    c.ghost_accepted = int(np.sum(is_ghost & ~is_null))
    c.ghost_rejected = int(np.sum(is_ghost & is_null))
    return c


def labeling_metrics(predicted: Sequence, truth: Sequence, parts: Optional[Sequence[str]] = None):
    """Score per-frame label predictions against the per-point correspondence.

    ``predicted`` and ``truth`` hold one integer array per frame, ``-1`` for
    null / ghost.  ``parts`` (one entry per label) enables the per-part
    breakdown; a point counts toward the part of its true label, or of its
    predicted label when it is a ghost.
    """
    if len(predicted) != len(truth):
        raise ContractError("prediction and truth frame counts differ")
    total = Confusion()
    per_part = {}
    owner_masks = {}
    if parts is not None:
        # trailing False: points with no owner (ghost predicted null)
        owner_masks = {part: np.array([q == part for q in parts] + [False])
                       for part in sorted(set(parts))}
    for t, (p, g) in enumerate(zip(predicted, truth)):
        p = np.asarray(p, dtype=np.int64)
        g = np.asarray(g, dtype=np.int64)
        if p.shape != g.shape:
            raise ContractError(f"frame {t}: {len(p)} predictions for {len(g)} points")
        total.add(_classify(p, g))
        if parts is not None:
            owner = np.where(g != NULL, g, p)
            owner = np.where(owner == NULL, len(parts), owner)
            for part, mask in owner_masks.items():
                sel = mask[owner]
                per_part.setdefault(part, Confusion()).add(_classify(p[sel], g[sel]))
    return LabelingReport(total.f1, total.accuracy, total.marker_accuracy, total, per_part)


@dataclass
class SolvingReport:
    mpjre: float  # degrees
    mpjpe: float  # centimeters
    per_joint_mpjre: np.ndarray
    per_joint_mpjpe: np.ndarray
    rotation_joints: np.ndarray  # joints included in mpjre

    def to_dict(self, names=None):
        out = {"mpjre_deg": self.mpjre, "mpjpe_cm": self.mpjpe}
        if names is not None:
            out["per_joint"] = {
                n: {"mpjpe_cm": float(self.per_joint_mpjpe[i]),
                    "mpjre_deg": float(self.per_joint_mpjre[i]) if i in set(self.rotation_joints.tolist()) else None}
                for i, n in enumerate(names)}
        return out


def solving_metrics(solved_motion: Motion, solved_skeleton: Skeleton, true_motion: Motion,
                    true_skeleton: Skeleton, exclude_leaves=True, joints=None):
    """MPJPE (cm, global positions) and MPJRE (degrees, local rotations).

    ``joints`` restricts both averages to a subset (e.g. body or hand joints).
    """
    if not solved_skeleton.same_topology(true_skeleton):
        raise ContractError("skeleton topology mismatch")
    if solved_motion.n_frames != true_motion.n_frames:
        raise ContractError("frame count mismatch")
    pa, _ = motion_forward_kinematics(solved_skeleton, solved_motion)
    pb, _ = motion_forward_kinematics(true_skeleton, true_motion)
    K = true_skeleton.n_joints
    per_pos = 100.0 * np.linalg.norm(pa - pb, axis=-1).mean(axis=0) if len(pa) else np.zeros(K)
    ang = geodesic_batch(solved_motion.rotations, true_motion.rotations)
    per_rot = np.rad2deg(ang.mean(axis=0)) if len(ang) else np.zeros(K)
    sel = np.arange(K) if joints is None else np.asarray(joints, dtype=np.int64)
    rot_sel = sel
    if exclude_leaves:
        rot_sel = np.setdiff1d(sel, true_skeleton.leaves)
    mpjpe = float(per_pos[sel].mean()) if len(sel) else 0.0
    mpjre = float(per_rot[rot_sel].mean()) if len(rot_sel) else 0.0
    return SolvingReport(mpjre, mpjpe, per_rot, per_pos, rot_sel)


def format_labeling_table(report: LabelingReport):
    """Two-column (body | hand) text table of F1 and accuracy, times 100."""
    body = report.per_part.get("body")
    hand = Confusion()
    for part in ("left_hand", "right_hand"):
        if part in report.per_part:
            hand.add(report.per_part[part])
    cols = [("body", body), ("hand", hand if hand.total else None)]
    lines = [f"{'':<10}" + "".join(f"{name:>10}" for name, _ in cols)]
    for metric in ("f1", "accuracy"):
        cells = "".join(f"{100 * getattr(c, metric):>10.2f}" if c is not None else f"{'-':>10}"
                        for _, c in cols)
        lines.append(f"{metric:<10}{cells}")
    lines.append(f"{'all':<10}{100 * report.f1:>10.2f}{100 * report.accuracy:>10.2f}  (f1, accuracy)")
    return "\n".join(lines)


def format_solving_table(rows):
    """``rows``: list of ``(name, body_report_or_None, hand_report_or_None)``."""
    lines = [f"{'':<12}{'MPJRE body':>12}{'MPJRE hand':>12}{'MPJPE body':>12}{'MPJPE hand':>12}"]
    for name, body, hand in rows:
        def cell(r, attr):
            return f"{getattr(r, attr):>12.4f}" if r is not None else f"{'-':>12}"
        lines.append(f"{name:<12}{cell(body, 'mpjre')}{cell(hand, 'mpjre')}"
                     f"{cell(body, 'mpjpe')}{cell(hand, 'mpjpe')}")
    return "\n".join(lines)


def format_jitter_table(levels_cm, rows):
    """One row per method, one MPJPE column per jitter level."""
    head = f"{'':<12}" + "".join(f"{('0' if l == 0 else f'+-{l:g}cm'):>10}" for l in levels_cm)
    lines = [head]
    for name, values in rows:
        lines.append(f"{name:<12}" + "".join(f"{v:>10.4f}" for v in values))
    return "\n".join(lines)
