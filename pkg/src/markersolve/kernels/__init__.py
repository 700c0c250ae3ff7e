"""Hot numeric kernels with a numba backend and a pure-numpy fallback.

The backend is chosen once at import from the ``MARKERSOLVE_DISABLE_NUMBA``
environment variable (any value other than ``""``/``"0"`` selects numpy) and
can be switched at runtime with :func:`set_backend`.  Every dispatcher also
takes an explicit ``backend=`` override, which the tests and the benchmark
use to compare the two paths.
"""

import os

import numpy as np

from . import _numpy

try:
    from . import _numba
except ImportError:  # pragma: no cover - numba is a hard dependency
    _numba = None

ENV_FLAG = "MARKERSOLVE_DISABLE_NUMBA"
BACKENDS = ("numba", "numpy")


def _default_backend():
    if _numba is None or os.environ.get(ENV_FLAG, "") not in ("", "0"):
        return "numpy"
    return "numba"


_backend = _default_backend()


def get_backend():
    return _backend


def set_backend(name):
    """Select ``"numba"`` or ``"numpy"`` for subsequent kernel calls."""
    global _backend
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and _numba is None:
        raise RuntimeError("numba is not importable")
    _backend = name


def _impl(backend):
    return _numba if (backend or _backend) == "numba" else _numpy


def forward_kinematics(parents, offsets, root_translation, local_rotations, backend=None):
    """Global positions ``(T, K, 3)`` and rotations ``(T, K, 3, 3)``."""
    return _impl(backend).forward_kinematics(
        np.ascontiguousarray(parents, dtype=np.int64),
        np.ascontiguousarray(offsets, dtype=float),
        np.ascontiguousarray(root_translation, dtype=float),
        np.ascontiguousarray(local_rotations, dtype=float),
    )


def sinkhorn_log(scores, log_row_mass, log_col_mass, iterations, backend=None):
    """Log-domain Sinkhorn; returns the log transport plan."""
    return _impl(backend).sinkhorn_log(
        np.ascontiguousarray(scores, dtype=float),
        np.ascontiguousarray(log_row_mass, dtype=float),
        np.ascontiguousarray(log_col_mass, dtype=float),
        int(iterations),
    )


def greedy_merge(node_frame, edge_a, edge_b, backend=None):
    """Union clusters along pre-sorted edges while frames stay disjoint.

    ``node_frame`` must hold compact frame ids ``0..F-1``.  Returns per-node
    cluster representatives and a mask of the edges that caused a merge.
    """
    return _impl(backend).greedy_merge(
        np.ascontiguousarray(node_frame, dtype=np.int64),
        np.ascontiguousarray(edge_a, dtype=np.int64),
        np.ascontiguousarray(edge_b, dtype=np.int64),
    )


def solve_chain(parents, offsets, primary_child, positions, twists, root_rotation,
                corrected=True, backend=None):
    """Local rotations ``(T, K, 3, 3)`` from joint positions and twist angles."""
    return _impl(backend).solve_chain(
        np.ascontiguousarray(parents, dtype=np.int64),
        np.ascontiguousarray(offsets, dtype=float),
        np.ascontiguousarray(primary_child, dtype=np.int64),
        np.ascontiguousarray(positions, dtype=float),
        np.ascontiguousarray(twists, dtype=float),
        np.ascontiguousarray(root_rotation, dtype=float),
        bool(corrected),
    )
