"""Comparison schemes: greedy and swap time-frequency allocation, and three
satellite-selection rules (minimum load, longest remaining visibility, TOPSIS)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scheduler.beam_alloc import window_is_free
from .scheduler.context import EpochContext
from .scheduler.plan import BeamPlan

TIME_FREQUENCY_SCHEMES = ("proposed", "greedy", "swap")
SATELLITE_SCHEMES = ("proposed_sa", "minload", "maxtime", "topsis")
SWAP_REL_TOL = 1e-9


@dataclass(frozen=True)
class BaselineChoice:
    time_frequency_scheme: str = "proposed"
    satellite_scheme: str = "proposed_sa"

    def __post_init__(self):
        if self.time_frequency_scheme not in TIME_FREQUENCY_SCHEMES:
            raise ValueError(f"time_frequency_scheme must be one of {TIME_FREQUENCY_SCHEMES}")
        if self.satellite_scheme not in SATELLITE_SCHEMES:
            raise ValueError(f"satellite_scheme must be one of {SATELLITE_SCHEMES}")

    @property
    def label(self) -> str:
        return f"{self.time_frequency_scheme}+{self.satellite_scheme}"


def greedy_allocation(ctx: EpochContext, sats, durations) -> BeamPlan:
    """Largest R*Q first, each at its earliest feasible (start, beam) with the full duration."""
    plan = BeamPlan.empty(ctx.f, sats)
    rq = ctx.rq
    order = sorted(range(len(sats)), key=lambda c: (-rq[c], c))
    for c in order:
        s, d = int(sats[c]), int(durations[c])
        if s < 0 or d < 1:
            continue
        placed = False
        for t in range(1, ctx.T - d + 2):
            for b in ctx.spectrum.beams_of(s):
                if window_is_free(plan, ctx, c, b, t, t + d - 1):
                    plan.assign(c, b, t, t + d - 1)
                    placed = True
                    break
            if placed:
                break
    return plan


def _swapped(plan: BeamPlan, ctx: EpochContext, i: int, j: int):
    out = plan.copy()
    si, sj = (int(plan.t_start[i]), int(plan.t_end[i])), (int(plan.t_start[j]), int(plan.t_end[j]))
    if plan.sat[i] == plan.sat[j]:
        bi, bj = int(plan.beam[i]), int(plan.beam[j])
        out.assign(i, bj, *sj)
        out.assign(j, bi, *si)
    else:
        out.assign(i, int(plan.beam[i]), *sj)
        out.assign(j, int(plan.beam[j]), *si)
    for c in (i, j):
        if not window_is_free(out, ctx, c, int(out.beam[c]), int(out.t_start[c]), int(out.t_end[c])):
            return None
    return out


def swap_refinement(plan: BeamPlan, ctx: EpochContext, max_rounds: int = 10_000) -> BeamPlan:
    """Apply improving pairwise swaps until a full scan finds none."""
    cur = plan.copy()
    g = ctx.gamma(cur)
    for _ in range(max_rounds):
        improved = False
        served = np.flatnonzero(cur.served)
        for a in range(len(served)):
            for b in range(a + 1, len(served)):
                cand = _swapped(cur, ctx, int(served[a]), int(served[b]))
                if cand is None:
                    continue
                g2 = ctx.gamma(cand)
                if g2 < g - SWAP_REL_TOL * max(1.0, abs(g)):
                    cur, g, improved = cand, g2, True
        if not improved:
            break
    return cur


def minload_satellites(visibility, q) -> np.ndarray:
    vis = np.asarray(visibility, dtype=bool)
    C, S = vis.shape
    load = np.zeros(S)
    out = np.full(C, -1, dtype=np.int64)
    for c in range(C):
        opts = np.flatnonzero(vis[c])
        if len(opts) == 0:
            continue
        s = int(opts[np.argmin(load[opts])])
        out[c] = s
        load[s] += q[c]
    return out


def maxtime_satellites(visibility, remaining_s) -> np.ndarray:
    vis = np.asarray(visibility, dtype=bool)
    rem = np.where(vis, remaining_s, -np.inf)
    return np.where(vis.any(axis=1), np.argmax(rem, axis=1), -1).astype(np.int64)


def topsis_closeness(attributes, weights=None) -> np.ndarray:
    """Closeness coefficients of alternatives (rows) over benefit attributes (columns)."""
    x = np.asarray(attributes, dtype=float)
    if x.ndim != 2 or len(x) == 0:
        return np.zeros(len(x))
    w = np.full(x.shape[1], 1.0 / x.shape[1]) if weights is None else np.asarray(weights, dtype=float)
    norm = np.sqrt((x ** 2).sum(axis=0))
    r = np.divide(x, norm, out=np.zeros_like(x), where=norm > 0)
    v = r * w
    best, worst = v.max(axis=0), v.min(axis=0)
    d_plus = np.sqrt(((v - best) ** 2).sum(axis=1))
    d_minus = np.sqrt(((v - worst) ** 2).sum(axis=1))
    tot = d_plus + d_minus
    return np.divide(d_minus, tot, out=np.zeros_like(tot), where=tot > 0)


def topsis_satellites(visibility, remaining_s, elevation, q, weights=None) -> np.ndarray:
    """Per cell, rank visible satellites on remaining visibility, elevation and 1/(1+load)."""
    vis = np.asarray(visibility, dtype=bool)
    C, S = vis.shape
    load = np.zeros(S)
    out = np.full(C, -1, dtype=np.int64)
    for c in range(C):
        opts = np.flatnonzero(vis[c])
        if len(opts) == 0:
            continue
        attrs = np.column_stack([remaining_s[c, opts], elevation[c, opts], 1.0 / (1.0 + load[opts])])
        cc = topsis_closeness(attrs, weights)
        s = int(opts[int(np.argmax(cc))])
        out[c] = s
        load[s] += q[c]
    return out
