"""Per-epoch inputs shared by every scheduler stage."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..linkmodel import InterferenceTupleSet, SpectrumPlan
from ..metrics import Trackers

WEIGHT_FLOOR = 1e-6


@dataclass
class EpochContext:
    f: int
    T: int
    V: float
    d_max: float
    visibility: np.ndarray
    elevation: np.ndarray
    spectrum: SpectrumPlan
    tuples: InterferenceTupleSet
    trackers: Trackers
    q: np.ndarray
    rates: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_cells(self) -> int:
        return self.visibility.shape[0]

    @property
    def n_sats(self) -> int:
        return self.visibility.shape[1]

    @property
    def rq(self) -> np.ndarray:
        return self.rates * self.q

    @property
    def m(self) -> np.ndarray:
        """Coefficient of t_start in gamma; revisit times are zero in the first epoch."""
        return (self.V / self.f if self.f > 1 else 0.0) + self.rq

    @property
    def n(self) -> np.ndarray:
        return self.rq

    @property
    def conflict_flat(self) -> np.ndarray:
        """(C*A, C*A) view of the pair-conflict table, indexed by ``cs_index``."""
        if "flat" not in self._cache:
            pc = self.tuples.pair_conflict
            n = pc.shape[0] * pc.shape[1]
            self._cache["flat"] = np.ascontiguousarray(pc.reshape(n, n), dtype=np.uint8)
        return self._cache["flat"]

    def cs_index(self, cells, sats) -> np.ndarray:
        """Row of (cell, satellite) in ``conflict_flat``; satellites outside the table map to -1."""
        cells = np.asarray(cells, dtype=np.int64)
        local = self.tuples.local_index(np.asarray(sats, dtype=np.int64))
        A = len(self.tuples.sats)
        return np.where(local >= 0, cells * A + local, -1)

    def conflicts(self, c: int, b: int, c2: int, b2: int) -> bool:
        return self.tuples.contains(c, b, c2, b2)

    def gamma(self, plan) -> float:
        return self.trackers.gamma(plan, self.rq, self.V)


def initial_allocation(visibility, elevation, prev_sats=None) -> np.ndarray:
    """Keep the previous satellite while visible, else take the highest one."""
    vis = np.asarray(visibility, dtype=bool)
    el = np.where(vis, elevation, -np.inf)
    best = np.where(vis.any(axis=1), np.argmax(el, axis=1), -1)
    if prev_sats is None:
        return best.astype(np.int64)
    prev = np.asarray(prev_sats)
    keep = (prev >= 0) & vis[np.arange(len(prev)), np.maximum(prev, 0)]
    return np.where(keep, prev, best).astype(np.int64)


def requested_durations(sats, q, rates, spectrum: SpectrumPlan, T: int) -> np.ndarray:
    """Slots asked for by each cell under a satellite allocation.

    min(Q T B_s / Q_s, ceil(Q / R)) clamped to [1, T]; 0 for cells without
    a satellite.
    """
    sats = np.asarray(sats)
    q = np.asarray(q, dtype=float)
    out = np.zeros(len(sats), dtype=np.int64)
    n_sats = len(spectrum.sat_beams)
    load = np.zeros(max(n_sats, int(sats.max()) + 1 if len(sats) else 0))
    ok = sats >= 0
    np.add.at(load, sats[ok], q[ok])
    for c in np.flatnonzero(ok):
        s = sats[c]
        B = len(spectrum.beams_of(int(s)))
        if B == 0:
            continue
        if q[c] <= 0 or load[s] <= 0 or rates[c] <= 0:
            out[c] = 1
            continue
        share = math.floor(q[c] * T * B / load[s])
        need = math.ceil(q[c] / rates[c])
        out[c] = min(max(min(share, need), 1), T)
    return out
