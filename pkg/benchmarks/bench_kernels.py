"""Time the numba kernels against the pure-numpy fallback.

Usage:
    python3 benchmarks/bench_kernels.py [--frames T] [--repeat R]

Sinkhorn is exp-bound: on full-body sized matrices numpy's vectorized exp
beats numba's scalar libm calls, while on hand-sized matrices the per-call
numpy overhead dominates and numba wins.  The first numba call per kernel
compiles (or loads the on-disk cache); it is reported separately and excluded from the steady-state timing.
"""

import argparse
import time

import numpy as np

from markersolve import kernels
from markersolve.simulate import NoiseConfig, simulate
from markersolve.solver import oracle_provider
from markersolve.tracklet import baseline_features, build_graph


def sample_inputs(n_frames, seed):
    """One closure per kernel, each taking the backend name."""
    frames, truth = simulate("fullbody54", n_frames / 60.0, 60.0,
                             NoiseConfig.uniform_occlusion(0.02, ghost_rate=1.0, shuffle=True, seed=seed),
                             seed=seed)
    sk, motion = truth.skeleton, truth.motion
    prov = oracle_provider(sk, motion, position_sigma=0.002, seed=seed)
    root_rot = np.ascontiguousarray(motion.rotations[:, 0])

    rng = np.random.default_rng(seed)
    mats = [rng.normal(size=(len(f) + 1, truth.layout.n_markers + 1)) for f in frames[:100]]
    rows = [np.log(np.r_[np.ones(m.shape[0] - 1), m.shape[1] - 1]) for m in mats]
    cols = [np.log(np.r_[np.ones(m.shape[1] - 1), m.shape[0] - 1]) for m in mats]

    small = [m[:21, :20] for m in mats]
    srows = [np.log(np.r_[np.ones(20), 19.0])] * len(small)
    scols = [np.log(np.r_[np.ones(19), 20.0])] * len(small)

    win = frames[:30]
    graph = build_graph(win, baseline_features(win), 0.1, 0.05, 2.0, 3)
    order = np.lexsort((graph.edge_b, graph.edge_a, graph.weights))
    node_frame = np.array([t for t, _ in graph.nodes]) - win[0].time_index

    return {
        "fk": lambda b: kernels.forward_kinematics(sk.parents, sk.offsets, motion.root_translation,
                                                   motion.rotations, backend=b),
        "sinkhorn 92x100": lambda b: [kernels.sinkhorn_log(m, r, c, 20, backend=b)
                                    for m, r, c in zip(mats, rows, cols)],
        "sinkhorn 20x100": lambda b: [kernels.sinkhorn_log(m, r, c, 20, backend=b)
                                      for m, r, c in zip(small, srows, scols)],
        "greedy_merge": lambda b: kernels.greedy_merge(node_frame, graph.edge_a[order],
                                                       graph.edge_b[order], backend=b),
        "solve_chain": lambda b: kernels.solve_chain(sk.parents, sk.offsets, sk.primary_child,
                                                     prov.positions, prov.twists, root_rot, backend=b),
    }


def _best(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--frames", type=int, default=600)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cases = sample_inputs(args.frames, args.seed)
    print(f"{'kernel':<16}{'first numba':>14}{'numba':>12}{'numpy':>12}{'speedup':>10}")
    for name, call in cases.items():
        t0 = time.perf_counter()
        call("numba")
        first = time.perf_counter() - t0
        tn = _best(lambda: call("numba"), args.repeat)
        tp = _best(lambda: call("numpy"), args.repeat)
        print(f"{name:<16}{first:>13.3f}s{tn:>11.4f}s{tp:>11.4f}s{tp / tn:>9.1f}x")


if __name__ == "__main__":
    main()
