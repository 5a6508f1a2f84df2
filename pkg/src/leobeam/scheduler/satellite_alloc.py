"""Serving-satellite allocation by simulated annealing over cell->satellite maps."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .beam_alloc import serving_beam_allocation
from .context import EpochContext, initial_allocation, requested_durations
from .service_time import service_time_allocation

SA_STREAM = 3


@dataclass(frozen=True)
class SaConfig:
    t1: float = 100.0
    t2: float = 1.0
    rho: float = 0.95
    moves_per_temperature: int = 1
    rng_seed: int = 0

    def __post_init__(self):
        if not self.t1 > self.t2 > 0:
            raise ValueError("need t1 > t2 > 0")
        if not 0 < self.rho < 1:
            raise ValueError("rho must lie in (0, 1)")
        if self.moves_per_temperature < 1:
            raise ValueError("moves_per_temperature must be >= 1")

    @property
    def temperature_steps(self) -> int:
        n, t = 0, self.t1
        while t > self.t2:
            n += 1
            t *= self.rho
        return n

    @property
    def evaluations(self) -> int:
        return self.temperature_steps * self.moves_per_temperature


def plan_for_allocation(ctx: EpochContext, sats, backend=None, on_step=None):
    """Beam allocation then service-time tuning for a fixed satellite map."""
    d = requested_durations(sats, ctx.q, ctx.rates, ctx.spectrum, ctx.T)
    plan = serving_beam_allocation(ctx, sats, d, backend)
    return service_time_allocation(plan, ctx, on_step)


@dataclass
class SaResult:
    plan: object
    gamma: float
    initial_gamma: float
    evaluations: int
    distinct: int
    accepted: int


def random_neighbor(sats, visibility, rng) -> np.ndarray:
    """Reassign one random multi-visible cell to another of its visible satellites."""
    vis = np.asarray(visibility, dtype=bool)
    movable = np.flatnonzero(vis.sum(axis=1) >= 2)
    out = np.array(sats, copy=True)
    if len(movable) == 0:
        return out
    c = int(movable[rng.integers(len(movable))])
    options = [s for s in np.flatnonzero(vis[c]) if s != out[c]]
    out[c] = options[rng.integers(len(options))]
    return out


def serving_satellite_allocation(ctx: EpochContext, cfg: SaConfig, prev_sats=None,
                                 backend=None, purpose: int = SA_STREAM, planner=None,
                                 priority=None) -> SaResult:
    """Anneal over satellite maps; each map is planned by ``planner(ctx, sats)``
    (beam allocation plus service-time tuning by default) and scored by gamma.

    Cells whose previous satellite is gone start on the visible satellite with
    the largest ``priority`` (elevation when not given).
    """
    if planner is None:
        def planner(ctx_, sats_):
            return plan_for_allocation(ctx_, sats_, backend)
    rng = np.random.default_rng([cfg.rng_seed, purpose, ctx.f])
    memo = {}

    def score(sats):
        key = tuple(int(x) for x in sats)
        if key not in memo:
            plan = planner(ctx, sats)
            memo[key] = (plan, ctx.gamma(plan))
        return memo[key]

    cur = initial_allocation(ctx.visibility, ctx.elevation if priority is None else priority, prev_sats)
    best_plan, g_cur = score(cur)
    g_init = g_best = g_cur
    evals, accepted = 1, 0
    if np.any(ctx.visibility.sum(axis=1) >= 2):
        temp = cfg.t1
        while temp > cfg.t2:
            for _ in range(cfg.moves_per_temperature):
                cand = random_neighbor(cur, ctx.visibility, rng)
                plan, g = score(cand)
                evals += 1
                if g < g_cur or rng.random() < math.exp(-(g - g_cur) / temp):
                    cur, g_cur = cand, g
                    accepted += 1
                if g < g_best:
                    best_plan, g_best = plan, g
            temp *= cfg.rho
    return SaResult(best_plan.copy(), g_best, g_init, evals, len(memo), accepted)
