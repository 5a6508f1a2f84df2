"""Exhaustive reference solvers for small instances.

These are deliberately naive: each one enumerates the whole search space and
scores candidates with the full objective, so they share no shortcuts with
the heuristics they check.
"""
from __future__ import annotations

import itertools
import json
from pathlib import Path

import numpy as np

from .linkmodel import InterferenceTupleSet, SpectrumPlan
from .metrics import Trackers
from .scheduler.beam_alloc import ConflictGraph, greedy_independent_set
from .scheduler.context import EpochContext
from .scheduler.plan import BeamPlan, plan_feasibility_check
from .scheduler.satellite_alloc import SaConfig, plan_for_allocation, serving_satellite_allocation

MAX_MWIS_VERTICES = 24


def is_independent(mask, adjacency) -> bool:
    idx = np.flatnonzero(mask)
    return not np.asarray(adjacency)[np.ix_(idx, idx)].any()


def is_maximal(mask, adjacency) -> bool:
    """No vertex outside the set can be added without breaking independence."""
    adj = np.asarray(adjacency, dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    covered = mask | adj[mask].any(axis=0) if mask.any() else mask.copy()
    return bool(covered.all())


def brute_force_mwis(weights, adjacency) -> tuple:
    """Exact maximum-weight independent set by subset enumeration.

    Returns (weight, mask). Vertices are added in index order and a branch is
    dropped as soon as it picks two adjacent vertices.
    """
    w = np.asarray(weights, dtype=float)
    adj = np.asarray(adjacency, dtype=bool)
    n = len(w)
    if n > MAX_MWIS_VERTICES:
        raise ValueError(f"brute force limited to {MAX_MWIS_VERTICES} vertices, got {n}")
    nbr = [int(sum(1 << j for j in np.flatnonzero(adj[i]))) for i in range(n)]
    best_w, best_set = 0.0, 0

    def rec(i, chosen, blocked, total):
        nonlocal best_w, best_set
        if i == n:
            if total > best_w:
                best_w, best_set = total, chosen
            return
        if not blocked >> i & 1:
            rec(i + 1, chosen | 1 << i, blocked | nbr[i], total + w[i])
        rec(i + 1, chosen, blocked, total)

    rec(0, 0, 0, 0.0)
    mask = np.array([(best_set >> i) & 1 for i in range(n)], dtype=bool)
    return float(best_w), mask


def random_graph(rng, n: int, edge_prob: float = 0.3, w_low: float = 0.1, w_high: float = 10.0):
    """Conflict graph with random symmetric edges and uniform weights."""
    upper = np.triu(rng.random((n, n)) < edge_prob, 1)
    adj = (upper | upper.T).astype(np.uint8)
    z = np.zeros(n, dtype=np.int64)
    return ConflictGraph(np.arange(n, dtype=np.int64), z, z, z, rng.uniform(w_low, w_high, n), adj, [])


def heuristic_mwis(graph: ConflictGraph, backend=None) -> tuple:
    mask = greedy_independent_set(graph, backend)
    return float(graph.weight[mask].sum()), mask


def synthetic_context(rng, n_cells: int = 3, n_sats: int = 2, beams_per_sat: int = 2, T: int = 6,
                      conflict_prob: float = 0.4, V: float = 100.0, d_max: float = 20.0,
                      f: int = 1, max_visible: int | None = None) -> EpochContext:
    """Random small epoch: visibility, queues, pair conflicts and some history."""
    S = n_sats
    vis = np.zeros((n_cells, S), dtype=bool)
    k_max = S if max_visible is None else min(max_visible, S)
    for c in range(n_cells):
        k = int(rng.integers(1, k_max + 1))
        vis[c, rng.choice(S, size=k, replace=False)] = True
    elev = np.where(vis, rng.uniform(40.0, 90.0, vis.shape), 0.0)
    spec = SpectrumPlan.uniform(S, beams_per_sat)
    upper = rng.random((n_cells * S, n_cells * S)) < conflict_prob
    flat = np.triu(upper, 1)
    flat = flat | flat.T
    pc = flat.reshape(n_cells, S, n_cells, S)
    tuples = InterferenceTupleSet(f, pc, spec, np.arange(S), S)
    tr = Trackers(n_cells, T, d_max)
    for g in range(1, f):
        # a plausible history: each cell served somewhere in the epoch or not at all
        hist = BeamPlan.empty(g, np.where(vis.any(axis=1), np.argmax(vis, axis=1), -1))
        for c in range(n_cells):
            if rng.random() < 0.8:
                s = int(rng.integers(1, T + 1))
                hist.assign(c, 0, s, int(rng.integers(s, T + 1)))
        tr.commit(hist)
    q = rng.integers(0, 12, n_cells).astype(float)
    rates = np.full(n_cells, 0.5 + rng.random())
    return EpochContext(f, T, V, d_max, vis, elev, spec, tuples, tr, q, rates)


def allocations(visibility):
    """Every cell->satellite map using visible satellites only (-1 with none visible)."""
    vis = np.asarray(visibility, dtype=bool)
    options = [list(np.flatnonzero(row)) or [-1] for row in vis]
    for combo in itertools.product(*options):
        yield np.asarray(combo, dtype=np.int64)


def exhaustive_allocation(ctx: EpochContext, planner=None, backend=None) -> tuple:
    """Best gamma over all allocations, each planned by ``planner`` (beam + service time)."""
    if planner is None:
        def planner(ctx_, sats_):
            return plan_for_allocation(ctx_, sats_, backend)
    best = (np.inf, None, None)
    for sats in allocations(ctx.visibility):
        plan = planner(ctx, sats)
        g = ctx.gamma(plan)
        if g < best[0]:
            best = (g, sats, plan)
    return best


def pair_box_argmin(plan: BeamPlan, ctx: EpochContext, c: int, c2: int) -> float:
    """Minimum gamma over every (end of c, start of c2) that keeps the plan feasible.

    c2 must follow c on the same beam; the start of c2 obeys the revisit bound
    relaxed to its current value, as in the scheduler.
    """
    best = ctx.gamma(plan)
    s_cap = max(ctx.trackers.latest_start_for_dmax(c2), int(plan.t_start[c2]))
    for e in range(int(plan.t_start[c]), ctx.T + 1):
        for s in range(e + 1, int(plan.t_end[c2]) + 1):
            if s > s_cap:
                break
            cand = plan.copy()
            cand.t_end[c] = e
            cand.t_start[c2] = s
            if plan_feasibility_check(cand, ctx.visibility, ctx.spectrum, ctx.tuples, ctx.T):
                continue
            best = min(best, ctx.gamma(cand))
    return best


def run_fixture(path) -> dict:
    """Run the oracle named by a JSON fixture file and report its result.

    Kinds: ``mwis`` (weights, edges), ``random_mwis`` (seed, n, edge_prob),
    ``allocation`` (seed and synthetic_context keywords, plus sa settings).
    """
    spec = json.loads(Path(path).read_text())
    kind = spec.get("kind")
    if kind == "mwis":
        w = np.asarray(spec["weights"], dtype=float)
        n = len(w)
        adj = np.zeros((n, n), dtype=np.uint8)
        for i, j in spec.get("edges", []):
            adj[i, j] = adj[j, i] = 1
        z = np.zeros(n, dtype=np.int64)
        graph = ConflictGraph(np.arange(n, dtype=np.int64), z, z, z, w, adj, [])
        return _mwis_report(graph)
    if kind == "random_mwis":
        rng = np.random.default_rng(spec.get("seed", 0))
        return _mwis_report(random_graph(rng, int(spec["n"]), float(spec.get("edge_prob", 0.3))))
    if kind == "allocation":
        keys = ("n_cells", "n_sats", "beams_per_sat", "T", "conflict_prob", "V", "d_max", "f",
                "max_visible")
        kw = {k: spec[k] for k in keys if k in spec}
        ctx = synthetic_context(np.random.default_rng(spec.get("seed", 0)), **kw)
        g, sats, _ = exhaustive_allocation(ctx)
        cfg = SaConfig(moves_per_temperature=int(spec.get("moves_per_temperature", 6)),
                       rng_seed=int(spec.get("seed", 0)))
        res = serving_satellite_allocation(ctx, cfg)
        return {"kind": kind, "exhaustive_gamma": g, "exhaustive_sats": [int(x) for x in sats],
                "sa_gamma": res.gamma, "sa_sats": [int(x) for x in res.plan.sat],
                "sa_evaluations": res.evaluations, "gap": res.gamma - g}
    raise ValueError(f"unknown fixture kind {kind!r}")


def _mwis_report(graph: ConflictGraph) -> dict:
    exact, exact_mask = brute_force_mwis(graph.weight, graph.adjacency)
    heur, mask = heuristic_mwis(graph)
    return {"kind": "mwis", "vertices": graph.n_vertices, "edges": graph.n_edges,
            "exact_weight": exact, "exact_set": [int(i) for i in np.flatnonzero(exact_mask)],
            "heuristic_weight": heur, "heuristic_set": [int(i) for i in np.flatnonzero(mask)],
            "ratio": heur / exact if exact > 0 else 1.0,
            "independent": is_independent(mask, graph.adjacency),
            "maximal": is_maximal(mask, graph.adjacency)}
