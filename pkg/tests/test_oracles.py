import json

import numpy as np

from leobeam import oracles


def test_mwis_enumeration_against_itertools():
    import itertools
    rng = np.random.default_rng(4)
    for _ in range(20):
        g = oracles.random_graph(rng, int(rng.integers(1, 10)), 0.4)
        best = 0.0
        n = g.n_vertices
        for bits in itertools.product([0, 1], repeat=n):
            m = np.array(bits, dtype=bool)
            if oracles.is_independent(m, g.adjacency):
                best = max(best, float(g.weight[m].sum()))
        assert abs(oracles.brute_force_mwis(g.weight, g.adjacency)[0] - best) < 1e-12


def test_allocations_enumerates_product():
    vis = np.array([[1, 1], [0, 1], [0, 0]], dtype=bool)
    combos = [tuple(a) for a in oracles.allocations(vis)]
    assert combos == [(0, 1, -1), (1, 1, -1)]


def test_fixture_kinds(tmp_path):
    p = tmp_path / "f.json"
    p.write_text(json.dumps({"kind": "random_mwis", "seed": 2, "n": 10}))
    out = oracles.run_fixture(p)
    assert out["heuristic_weight"] <= out["exact_weight"] + 1e-12
    p.write_text(json.dumps({"kind": "allocation", "seed": 5, "n_cells": 3, "n_sats": 2, "f": 2}))
    out = oracles.run_fixture(p)
    assert out["gap"] >= -1e-9
