import os
import subprocess
import sys

import numpy as np
import pytest

from markersolve import kernels
from markersolve.simulate import NoiseConfig, simulate
from markersolve.solver import oracle_provider
from markersolve.tracklet import baseline_features, build_graph


@pytest.fixture(scope="module")
def scene():
    noise = NoiseConfig.uniform_occlusion(0.05, ghost_rate=1.0, shuffle=True, seed=3)
    return simulate("fullbody54", 0.5, 60.0, noise, seed=3)


def both(fn):
    return fn("numba"), fn("numpy")


def test_fk_backends_agree(scene):
    _, truth = scene
    sk, m = truth.skeleton, truth.motion
    (pa, ra), (pb, rb) = both(lambda b: kernels.forward_kinematics(
        sk.parents, sk.offsets, m.root_translation, m.rotations, backend=b))
    np.testing.assert_allclose(pa, pb, atol=1e-13)
    np.testing.assert_allclose(ra, rb, atol=1e-13)


@pytest.mark.parametrize("shape", [(1, 1), (3, 5), (9, 9), (40, 92)])
def test_sinkhorn_backends_agree(shape, rng):
    s = rng.normal(scale=3.0, size=shape)
    row = np.log(rng.uniform(0.5, 2.0, shape[0]))
    col = np.log(rng.uniform(0.5, 2.0, shape[1]))
    a, b = both(lambda be: kernels.sinkhorn_log(s, row, col, 50, backend=be))
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_greedy_merge_backends_agree(scene):
    frames, _ = scene
    win = frames[:20]
    g = build_graph(win, baseline_features(win), 0.1, 0.05, 2.0, 3)
    order = np.lexsort((g.edge_b, g.edge_a, g.weights))
    node_frame = np.array([t for t, _ in g.nodes]) - win[0].time_index
    (ra, ma), (rb, mb) = both(lambda b: kernels.greedy_merge(node_frame, g.edge_a[order], g.edge_b[order],
                                                             backend=b))
    assert np.array_equal(ra, rb) and np.array_equal(ma, mb)
    assert ma.any()


@pytest.mark.parametrize("corrected", [True, False])
def test_solve_chain_backends_agree(scene, corrected):
    _, truth = scene
    sk, m = truth.skeleton, truth.motion
    prov = oracle_provider(sk, m, position_sigma=0.003, twist_sigma=0.05, seed=0)
    a, b = both(lambda be: kernels.solve_chain(sk.parents, sk.offsets, sk.primary_child, prov.positions,
                                               prov.twists, m.rotations[:, 0], corrected, backend=be))
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_set_backend_validates():
    with pytest.raises(ValueError):
        kernels.set_backend("cuda")


@pytest.mark.parametrize("value, expected", [("1", "numpy"), ("0", "numba"), ("", "numba")])
def test_env_flag_selects_backend(value, expected):
    env = dict(os.environ, **{kernels.ENV_FLAG: value})
    out = subprocess.run([sys.executable, "-c", "from markersolve import kernels; print(kernels.get_backend())"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == expected
