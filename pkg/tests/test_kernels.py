import os
import subprocess
import sys

import numpy as np
import pytest

from flowcomm import Laplacian, Replicator, kernels, synthetic

needs_cython = pytest.mark.skipif("cython" not in kernels.available_backends(),
                                  reason="compiled kernels not built")


def problem(n=300, p=0.03, y=7, seed=0):
    rng = np.random.default_rng(seed)
    g = synthetic.random_connected(n, p, rng)
    x = np.ascontiguousarray(rng.uniform(-np.pi, np.pi, size=(n, y)))
    return g, x, rng


def test_python_backend_always_available():
    assert "python" in kernels.available_backends()
    assert kernels.BACKEND in kernels.available_backends()


def test_env_var_forces_python_backend():
    env = dict(os.environ, FLOWCOMM_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import flowcomm; print(flowcomm.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@pytest.mark.parametrize("name", ["python", pytest.param("cython", marks=needs_cython)])
def test_operator_apply_matches_dense(name):
    g, x, _ = problem(n=80, p=0.1)
    k = kernels.backend(name)
    w = g.adjacency_matrix().toarray()
    for diag in (g.degrees, np.full(g.num_nodes, 4.5)):
        out = np.empty_like(x)
        k.operator_apply(g.indptr, g.indices, g.data, np.ascontiguousarray(diag), x, out, 1)
        assert np.allclose(out, np.diag(diag) @ x - w @ x, atol=1e-12)


@needs_cython
@pytest.mark.parametrize("kind", [Laplacian(), Replicator(7.0)])
def test_euler_step_bitwise_across_backends_and_threads(kind):
    g, x, _ = problem()
    diag = np.ascontiguousarray(kind.diagonal(g))
    results = []
    for name, threads in [("python", 1), ("cython", 1), ("cython", 4)]:
        out = np.empty_like(x)
        kernels.backend(name).euler_step(g.indptr, g.indices, g.data, diag, x, 0.01, out, threads)
        results.append(out)
    assert np.array_equal(results[0], results[1])
    assert np.array_equal(results[1], results[2])


@needs_cython
@pytest.mark.parametrize("unit_ratio", [True, False])
def test_similarity_threads_and_backends(unit_ratio):
    g, x, rng = problem()
    steady = np.ascontiguousarray(rng.uniform(0.1, 1.0, size=x.shape))
    steady[5, 2] = 0.0
    outs = []
    for name, threads in [("python", 1), ("cython", 1), ("cython", 3)]:
        vals = np.empty(g.num_edges)
        ok = np.empty(g.num_edges, np.uint8)
        kernels.backend(name).edge_similarity(g.edge_src, g.edge_dst, x, steady, unit_ratio,
                                              1e-12, vals, ok, threads)
        outs.append((vals, ok))
    for vals, ok in outs[1:]:
        assert np.array_equal(ok, outs[0][1])
        assert np.allclose(vals, outs[0][0], atol=1e-12, rtol=0, equal_nan=True)
    assert np.array_equal(outs[1][0], outs[2][0], equal_nan=True)
    touches = (g.edge_src == 5) | (g.edge_dst == 5)
    assert np.all(outs[0][1][touches] == (1 if unit_ratio else 0))


@needs_cython
def test_threshold_labels_backends_on_large_graph():
    g, _, rng = problem(n=2000, p=0.003)
    sims = rng.uniform(-1, 1, g.num_edges)
    defined = (rng.random(g.num_edges) > 0.05).astype(np.uint8)
    for thr in (-1.0, 0.0, 0.5, 0.9, 1.01):
        a = kernels.backend("cython").threshold_labels(g.num_nodes, g.edge_src, g.edge_dst,
                                                       sims, defined, thr)
        b = kernels.backend("python").threshold_labels(g.num_nodes, g.edge_src, g.edge_dst,
                                                       sims, defined, thr)
        assert np.array_equal(np.asarray(a), np.asarray(b))
