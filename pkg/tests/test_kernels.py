import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leobeam import _kernels_py, kernels

compiled = pytest.mark.skipif("compiled" not in kernels.BACKENDS, reason="extension not built")


def random_vertices(rng, n, n_cells=5, n_sats=3, beams=2, T=8):
    cell = rng.integers(0, n_cells, n)
    sat = rng.integers(0, n_sats, n)
    b = rng.integers(0, beams, n)
    beam = sat * beams + b
    start = rng.integers(1, T + 1, n)
    end = np.minimum(start + rng.integers(0, 3, n), T)
    cs = np.where(rng.random(n) < 0.1, -1, cell * n_sats + sat)
    m = n_cells * n_sats
    upper = np.triu(rng.random((m, m)) < 0.3, 1)
    conflict = (upper | upper.T).astype(np.uint8)
    return [x.astype(np.int64) for x in (cell, beam, b, sat, start, end, cs)] + [conflict]


@compiled
@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.integers(0, 60))
def test_backends_agree(seed, n):
    rng = np.random.default_rng(seed)
    args = random_vertices(rng, n)
    a = _kernels_py.build_adjacency(*args)
    b = kernels.BACKENDS["compiled"].build_adjacency(*args)
    assert np.array_equal(a, b)
    order = rng.permutation(n).astype(np.int64)
    assert np.array_equal(_kernels_py.greedy_mis(order, a), kernels.BACKENDS["compiled"].greedy_mis(order, a))


def test_adjacency_rules():
    # vertices: (cell, beam, subband, sat, start, end)
    cell = np.array([0, 0, 1, 2, 3])
    beam = np.array([0, 1, 0, 2, 2])
    sub = np.array([0, 1, 0, 0, 0])
    sat = np.array([0, 0, 0, 1, 1])
    start = np.array([1, 5, 2, 1, 9])
    end = np.array([2, 6, 3, 4, 9])
    cs = cell * 2 + sat
    conflict = np.zeros((8, 8), dtype=np.uint8)
    conflict[0 * 2 + 0, 2 * 2 + 1] = conflict[2 * 2 + 1, 0] = 1
    adj = _kernels_py.build_adjacency(cell, beam, sub, sat, start, end, cs, conflict)
    assert adj[0, 1] == 1  # same cell
    assert adj[0, 2] == 1  # same beam, overlapping
    assert adj[0, 3] == 1  # co-frequency, conflicting pair, overlapping
    assert adj[2, 3] == 0  # co-frequency but no conflicting pair
    assert adj[3, 4] == 0  # same beam, disjoint windows
    assert np.array_equal(adj, adj.T) and not adj.diagonal().any()


def test_empty_inputs(backend):
    k = kernels.get_backend(backend)
    z = np.zeros(0, dtype=np.int64)
    adj = k.build_adjacency(z, z, z, z, z, z, z, np.zeros((0, 0), dtype=np.uint8))
    assert adj.shape == (0, 0)
    assert len(k.greedy_mis(z, adj)) == 0


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def test_env_forces_pure_python():
    env = dict(os.environ, LEOBEAM_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from leobeam import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
