"""Per-frame point-to-label assignment.

Scores for ``n`` points against ``N`` labels are padded with a dustbin row and
column, pushed through log-domain Sinkhorn iterations, and discretized with a
greedy mutual-argmax rule that uses each valid label at most once.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels

DEFAULT_DUSTBIN = 0.0
DEFAULT_ITERATIONS = 20
DEFAULT_ACCEPT_THRESHOLD = 0.3
NULL = -1


@dataclass(frozen=True, eq=False)
class ConfidenceMatrix:
    """Normalized ``(n + 1, N + 1)`` plan; last row/column is the dustbin."""

    scores: np.ndarray

    @property
    def n_points(self):
        return self.scores.shape[0] - 1

    @property
    def n_labels(self):
        return self.scores.shape[1] - 1

    def point_scores(self, i):
        """Row of point ``i`` over labels plus dustbin, length ``N + 1``."""
        return self.scores[i]


@dataclass(frozen=True, eq=False)
class FrameLabeling:
    labels: np.ndarray       # (n,) label index or NULL
    confidence: np.ndarray   # (n,)


def augment_scores(initial, dustbin_score=DEFAULT_DUSTBIN):
    initial = np.asarray(initial, dtype=float)
    if initial.ndim != 2:
        raise ValueError("initial scores must be a 2-D matrix")
    if not np.all(np.isfinite(initial)):
        raise ValueError("initial scores must be finite")
    n, N = initial.shape
    out = np.full((n + 1, N + 1), float(dustbin_score))
    out[:n, :N] = initial
    return out


def default_marginals(n_points, n_labels):
    """Unit mass per point and label; dustbins absorb the other side's total."""
    row = np.ones(n_points + 1)
    row[-1] = n_labels
    col = np.ones(n_labels + 1)
    col[-1] = n_points
    return row, col


def sinkhorn_normalize(augmented, iterations=DEFAULT_ITERATIONS, marginals=None, backend=None):
    """Alternate row and column normalization of ``exp(augmented)`` in log space."""
    if iterations < 1:
        raise ValueError("at least one iteration")
    z = np.asarray(augmented, dtype=float)
    if z.ndim != 2 or min(z.shape) < 1:
        raise ValueError("augmented scores must be a non-empty 2-D matrix")
    if not np.all(np.isfinite(z)):
        raise ValueError("log-scores must be finite")
    row, col = default_marginals(z.shape[0] - 1, z.shape[1] - 1) if marginals is None else marginals
    row = np.asarray(row, dtype=float)
    col = np.asarray(col, dtype=float)
    if row.shape != (z.shape[0],) or col.shape != (z.shape[1],):
        raise ValueError("marginals do not match the score matrix")
    if np.any(row < 0) or np.any(col < 0) or not np.isclose(row.sum(), col.sum()):
        raise ValueError("marginals must be non-negative with equal totals")

    out = np.zeros(z.shape)
    # zero-mass rows/columns (empty frames) carry nothing and are left out
    r = row > 0
    c = col > 0
    if r.any() and c.any():
        log_plan = kernels.sinkhorn_log(z[np.ix_(r, c)], np.log(row[r]), np.log(col[c]),
                                        iterations, backend=backend)
        out[np.ix_(r, c)] = np.exp(log_plan)
    return ConfidenceMatrix(out)


def marginal_violation(conf: ConfidenceMatrix, marginals=None):
    """Largest absolute deviation of any row or column sum from its target."""
    row, col = default_marginals(conf.n_points, conf.n_labels) if marginals is None else marginals
    p = conf.scores
    return float(max(np.abs(p.sum(axis=1) - row).max(), np.abs(p.sum(axis=0) - col).max()))


def extract_labels(confidence: ConfidenceMatrix, accept_threshold=DEFAULT_ACCEPT_THRESHOLD):
    """Greedy mutual-argmax discretization.

    Entries are visited from highest to lowest (ties by row, then column).
    An entry is accepted when it clears ``accept_threshold``, both its point
    and label are still free, and it is at least every remaining entry of its
    row and column, the dustbin entries included.  Unaccepted points are null
    and report their dustbin confidence.
    """
    p = confidence.scores
    n, N = confidence.n_points, confidence.n_labels
    labels = np.full(n, NULL, dtype=np.int64)
    conf = p[:n, N].copy()
    if n == 0 or N == 0:
        return FrameLabeling(labels, conf)
    block = p[:n, :N]
    rows, cols = np.unravel_index(np.lexsort((np.tile(np.arange(N), n),
                                              np.repeat(np.arange(n), N),
                                              -block.ravel())), block.shape)
    row_free = np.ones(n, dtype=bool)
    col_free = np.ones(N, dtype=bool)
    for i, j in zip(rows, cols):
        v = block[i, j]
        if v < accept_threshold:
            break
        if not (row_free[i] and col_free[j]):
            continue
        if v < p[i, N] or v < p[n, j]:
            continue
        if v < block[i, col_free].max() or v < block[row_free, j].max():
            continue
        labels[i] = j
        conf[i] = v
        row_free[i] = False
        col_free[j] = False
    return FrameLabeling(labels, conf)


def label_frame(scores, dustbin_score=DEFAULT_DUSTBIN, iterations=DEFAULT_ITERATIONS,
                accept_threshold=DEFAULT_ACCEPT_THRESHOLD):
    """Score matrix ``(n, N)`` to ``(ConfidenceMatrix, FrameLabeling)``."""
    conf = sinkhorn_normalize(augment_scores(scores, dustbin_score), iterations)
    return conf, extract_labels(conf, accept_threshold)
