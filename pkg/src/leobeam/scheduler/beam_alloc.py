"""Serving-beam allocation: weighted conflict graph plus greedy independent set."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kernels
from .context import WEIGHT_FLOOR, EpochContext
from .plan import BeamPlan, windows_overlap


@dataclass
class ConflictGraph:
    cell: np.ndarray
    beam: np.ndarray
    start: np.ndarray
    end: np.ndarray
    weight: np.ndarray
    adjacency: np.ndarray
    flagged: list  # cells with a satellite but no beam

    @property
    def n_vertices(self) -> int:
        return len(self.cell)

    @property
    def n_edges(self) -> int:
        return int(self.adjacency.sum()) // 2

    @property
    def tau(self) -> np.ndarray:
        if self.n_vertices == 0:
            return np.zeros(0)
        nbr = self.adjacency.astype(float) @ self.weight
        return self.weight / (self.weight + nbr)

    def order(self) -> np.ndarray:
        """Descending tau, then descending weight, then ascending (cell, beam, start)."""
        if self.n_vertices == 0:
            return np.zeros(0, dtype=np.int64)
        return np.lexsort((self.start, self.beam, self.cell, -self.weight, -self.tau)).astype(np.int64)

    def vertex_counts(self, n_cells: int) -> np.ndarray:
        return np.bincount(self.cell, minlength=n_cells)


def build_conflict_graph(ctx: EpochContext, sats, durations, backend=None) -> ConflictGraph:
    """One vertex per (cell, beam of its satellite, start slot) with the requested duration."""
    T = ctx.T
    sp = ctx.spectrum
    tr = ctx.trackers
    cells, beams, starts, weights = [], [], [], []
    flagged = []
    for c in range(len(sats)):
        s = int(sats[c])
        d = int(durations[c])
        if s < 0 or d < 1:
            continue
        bset = sp.beams_of(s)
        if not bset:
            flagged.append(c)
            continue
        st = np.arange(1, T - d + 2)
        latest = tr.latest_start_for_dmax(c)
        if np.any(st <= latest):
            st = st[st <= latest]
        w = np.array([max(ctx.d_max - tr.d_tilde_at(c, int(t)), WEIGHT_FLOOR) for t in st])
        for b in bset:
            cells.append(np.full(len(st), c))
            beams.append(np.full(len(st), b))
            starts.append(st)
            weights.append(w)
    if cells:
        cell = np.concatenate(cells).astype(np.int64)
        beam = np.concatenate(beams).astype(np.int64)
        start = np.concatenate(starts).astype(np.int64)
        weight = np.concatenate(weights).astype(float)
    else:
        cell = beam = start = np.zeros(0, dtype=np.int64)
        weight = np.zeros(0)
    end = start + np.asarray(durations, dtype=np.int64)[cell] - 1 if len(cell) else start.copy()
    k = kernels.get_backend(backend)
    sat_of = sp.beam_sat[beam] if len(beam) else beam
    adj = k.build_adjacency(cell, beam, sp.beam_subband[beam] if len(beam) else beam, sat_of,
                            start, end, ctx.cs_index(cell, sat_of), ctx.conflict_flat)
    return ConflictGraph(cell, beam, start, end, weight, adj, flagged)


def greedy_independent_set(graph: ConflictGraph, backend=None) -> np.ndarray:
    if graph.n_vertices == 0:
        return np.zeros(0, dtype=bool)
    k = kernels.get_backend(backend)
    return k.greedy_mis(graph.order(), graph.adjacency).astype(bool)


def window_is_free(plan: BeamPlan, ctx: EpochContext, c: int, b: int, s: int, e: int) -> bool:
    """Whether cell c may use beam b over [s, e] given the cells already placed."""
    for x in np.flatnonzero(plan.served):
        if x == c or not windows_overlap(plan.t_start[x], plan.t_end[x], s, e):
            continue
        bx = int(plan.beam[x])
        if bx == b or ctx.conflicts(c, b, int(x), bx):
            return False
    return True


def fallback_assign(plan: BeamPlan, ctx: EpochContext, cells) -> None:
    """Give each listed cell one slot on the earliest free (slot, beam), if any."""
    sp = ctx.spectrum
    for c in cells:
        s = int(plan.sat[c])
        if s < 0:
            continue
        for t in range(1, ctx.T + 1):
            beam = next((b for b in sp.beams_of(s) if window_is_free(plan, ctx, c, b, t, t)), None)
            if beam is not None:
                plan.assign(c, beam, t, t)
                break


def serving_beam_allocation(ctx: EpochContext, sats, durations, backend=None,
                            return_graph: bool = False):
    """Greedy weighted independent set over the conflict graph, then 1-slot fallback."""
    graph = build_conflict_graph(ctx, sats, durations, backend)
    chosen = greedy_independent_set(graph, backend)
    plan = BeamPlan.empty(ctx.f, sats)
    for v in np.flatnonzero(chosen):
        plan.assign(int(graph.cell[v]), int(graph.beam[v]), int(graph.start[v]), int(graph.end[v]))
    left = [c for c in range(len(sats)) if sats[c] >= 0 and not plan.served[c]]
    fallback_assign(plan, ctx, left)
    if return_graph:
        return plan, graph, chosen
    return plan
