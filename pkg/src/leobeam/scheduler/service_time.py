"""Service-time fine-tuning of the windows fixed by beam allocation.

Cells on one beam are visited in ascending start order. Each adjacent pair
(end of c, start of c+1) is moved to the argmin of m_{c+1} s' - n_c e over a
finite box; then the boundary pair (end of last, start of first). Since the
objective is exactly the part of gamma that depends on those two slots,
gamma never increases.
"""
from __future__ import annotations

import numpy as np

from .context import EpochContext
from .plan import BeamPlan

REL_TOL = 1e-9


def _conflicting(plan: BeamPlan, ctx: EpochContext, c: int) -> np.ndarray:
    """Served cells whose windows must never overlap cell c's (other beams)."""
    b = int(plan.beam[c])
    out = []
    for x in np.flatnonzero(plan.served):
        if x != c and ctx.conflicts(c, b, int(x), int(plan.beam[x])):
            out.append(x)
    return np.asarray(out, dtype=np.int64)


def end_upper_bound(plan: BeamPlan, ctx: EpochContext, c: int) -> int:
    """Latest end slot for c that stays clear of conflicting windows after its start."""
    up = ctx.T
    for x in _conflicting(plan, ctx, c):
        if plan.t_end[x] >= plan.t_start[c]:
            up = min(up, int(plan.t_start[x]) - 1)
    return up


def start_lower_bound(plan: BeamPlan, ctx: EpochContext, c: int) -> int:
    """Earliest start slot for c that stays clear of conflicting windows before its end."""
    low = 1
    for x in _conflicting(plan, ctx, c):
        if plan.t_start[x] <= plan.t_end[c]:
            low = max(low, int(plan.t_end[x]) + 1)
    return low


def start_upper_bound(ctx: EpochContext, c: int, current: int, end: int) -> int:
    """Revisit bound on the start, relaxed so the current start stays admissible."""
    return min(end, max(ctx.trackers.latest_start_for_dmax(c), current))


def _improves(best: float, cur: float) -> bool:
    return best < cur - REL_TOL * max(1.0, abs(cur))


def tune_pair(plan: BeamPlan, ctx: EpochContext, c: int, c2: int) -> bool:
    """Move (t_end[c], t_start[c2]) to the box argmin. Returns True if changed."""
    m2 = ctx.m[c2]
    n1 = ctx.n[c]
    e_lo = int(plan.t_start[c])
    e_hi = end_upper_bound(plan, ctx, c)
    s_lo = start_lower_bound(plan, ctx, c2)
    s_hi = start_upper_bound(ctx, c2, int(plan.t_start[c2]), int(plan.t_end[c2]))
    e_cur, s_cur = int(plan.t_end[c]), int(plan.t_start[c2])
    if e_hi < e_lo or s_hi < s_lo:
        return False
    e = np.arange(e_lo, e_hi + 1)[:, None]
    s = np.arange(s_lo, s_hi + 1)[None, :]
    val = np.where(e < s, m2 * s - n1 * e, np.inf)
    cur = m2 * s_cur - n1 * e_cur
    best = val.min()
    if np.isfinite(best) and _improves(best, cur):
        # max e, then min s among minimizers
        ii, jj = np.nonzero(val == best)
        k = np.lexsort((jj, -ii))[0]
        new_e, new_s = int(e[ii[k], 0]), int(s[0, jj[k]])
    elif n1 == 0:
        new_e, new_s = min(e_hi, s_cur - 1), s_cur
        if new_e <= e_cur:
            return False
    else:
        return False
    if (new_e, new_s) == (e_cur, s_cur):
        return False
    plan.t_end[c] = new_e
    plan.t_start[c2] = new_s
    return True


def tune_boundary(plan: BeamPlan, ctx: EpochContext, first: int, last: int) -> bool:
    """Free the first start and the last end inside [1, T]."""
    m1 = ctx.m[first]
    nl = ctx.n[last]
    s_lo = start_lower_bound(plan, ctx, first)
    s_cur, e_cur = int(plan.t_start[first]), int(plan.t_end[last])
    s_hi = start_upper_bound(ctx, first, s_cur, int(plan.t_end[first]))
    e_lo = int(plan.t_start[last])
    e_hi = end_upper_bound(plan, ctx, last)
    if s_hi < s_lo or e_hi < e_lo:
        return False
    s = np.arange(s_lo, s_hi + 1)[:, None]
    e = np.arange(e_lo, e_hi + 1)[None, :]
    if first == last:
        val = np.where(s <= e, m1 * s - nl * e, np.inf)
    else:
        val = np.broadcast_to(m1 * s - nl * e, (s.shape[0], e.shape[1])).astype(float)
    cur = m1 * s_cur - nl * e_cur
    best = val.min()
    if np.isfinite(best) and _improves(best, cur):
        ii, jj = np.nonzero(val == best)
        k = np.lexsort((ii, -jj))[0]
        new_s, new_e = int(s[ii[k], 0]), int(e[0, jj[k]])
    elif nl == 0:
        new_s, new_e = s_cur, e_hi
        if new_e <= e_cur:
            return False
    else:
        return False
    if (new_s, new_e) == (s_cur, e_cur):
        return False
    plan.t_start[first] = new_s
    plan.t_end[last] = new_e
    return True


def beam_cells(plan: BeamPlan, b: int) -> list:
    idx = np.flatnonzero(plan.beam == b)
    return [int(c) for c in idx[np.argsort(plan.t_start[idx], kind="stable")]]


def service_time_allocation(plan: BeamPlan, ctx: EpochContext, on_step=None) -> BeamPlan:
    """Refined copy of ``plan``. ``on_step(before, after)`` sees gamma around each step."""
    out = plan.copy()
    track = on_step is not None
    for b in range(ctx.spectrum.beam_count):
        cells = beam_cells(out, b)
        if not cells:
            continue
        for i in range(len(cells) - 1):
            g0 = ctx.gamma(out) if track else None
            tune_pair(out, ctx, cells[i], cells[i + 1])
            if track:
                on_step(g0, ctx.gamma(out))
        g0 = ctx.gamma(out) if track else None
        tune_boundary(out, ctx, cells[0], cells[-1])
        if track:
            on_step(g0, ctx.gamma(out))
    return out
