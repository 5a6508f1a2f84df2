"""Beam plans, their JSON form, and the constraint checker."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

UNSERVED = -1


@dataclass
class BeamPlan:
    """One epoch's decision. ``beam == -1`` marks an unserved cell.

    ``sat`` is the satellite allocation the plan was built for; a cell may
    hold a satellite but no beam when nothing fit.
    """
    epoch: int
    sat: np.ndarray
    beam: np.ndarray
    t_start: np.ndarray
    t_end: np.ndarray

    @classmethod
    def empty(cls, epoch: int, sats) -> "BeamPlan":
        C = len(sats)
        z = np.zeros(C, dtype=np.int64)
        return cls(epoch, np.asarray(sats, dtype=np.int64).copy(), np.full(C, UNSERVED, dtype=np.int64),
                   z.copy(), z.copy())

    def copy(self) -> "BeamPlan":
        return BeamPlan(self.epoch, self.sat.copy(), self.beam.copy(), self.t_start.copy(), self.t_end.copy())

    @property
    def n_cells(self) -> int:
        return len(self.sat)

    @property
    def served(self) -> np.ndarray:
        return self.beam >= 0

    @property
    def durations(self) -> np.ndarray:
        return np.where(self.served, self.t_end - self.t_start + 1, 0)

    @property
    def realized_sats(self) -> np.ndarray:
        return np.where(self.served, self.sat, UNSERVED)

    def assign(self, c: int, beam: int, start: int, end: int) -> None:
        self.beam[c] = beam
        self.t_start[c] = start
        self.t_end[c] = end

    def clear(self, c: int) -> None:
        self.beam[c] = UNSERVED
        self.t_start[c] = 0
        self.t_end[c] = 0

    def alpha(self, n_beams: int) -> np.ndarray:
        a = np.zeros((self.n_cells, n_beams), dtype=np.int64)
        idx = np.flatnonzero(self.served)
        a[idx, self.beam[idx]] = 1
        return a

    def to_dict(self) -> dict:
        cells = []
        for c in range(self.n_cells):
            served = bool(self.beam[c] >= 0)
            cells.append({
                "cell": c,
                "sat": int(self.sat[c]) if served else None,
                "beam": int(self.beam[c]) if served else None,
                "t_start": int(self.t_start[c]) if served else None,
                "t_end": int(self.t_end[c]) if served else None,
            })
        return {"epoch": int(self.epoch), "cells": cells}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "BeamPlan":
        cells = sorted(d["cells"], key=lambda r: r["cell"])
        C = len(cells)
        plan = cls.empty(d["epoch"], np.full(C, UNSERVED))
        for r in cells:
            c = r["cell"]
            if r.get("beam") is not None:
                plan.sat[c] = r["sat"]
                plan.assign(c, r["beam"], r["t_start"], r["t_end"])
        return plan


def windows_overlap(s1, e1, s2, e2) -> bool:
    return not (e1 < s2 or e2 < s1)


@dataclass
class Violation:
    cell: int
    constraint: str
    detail: str

    def __str__(self):
        return f"cell {self.cell}: {self.constraint}: {self.detail}"


def plan_feasibility_check(plan: BeamPlan, visibility, spectrum, tuples, T: int) -> list:
    """Every violated constraint of the plan; an empty list means feasible.

    ``tuples`` is an InterferenceTupleSet (or None to skip the angle rule).
    """
    out = []
    vis = np.asarray(visibility)
    served = np.flatnonzero(plan.served)
    for c in served:
        b, s, ts, te = int(plan.beam[c]), int(plan.sat[c]), int(plan.t_start[c]), int(plan.t_end[c])
        if not 0 <= b < spectrum.beam_count:
            out.append(Violation(c, "beam", f"unknown beam {b}"))
            continue
        if spectrum.beam_sat[b] != s:
            out.append(Violation(c, "beam-satellite", f"beam {b} belongs to satellite {spectrum.beam_sat[b]}, not {s}"))
        if not vis[c, spectrum.beam_sat[b]]:
            out.append(Violation(c, "visibility", f"satellite {spectrum.beam_sat[b]} not visible"))
        if not 1 <= ts <= te <= T:
            out.append(Violation(c, "window", f"need 1 <= t_start {ts} <= t_end {te} <= {T}"))
    for i, c in enumerate(served):
        for c2 in served[i + 1:]:
            if not windows_overlap(plan.t_start[c], plan.t_end[c], plan.t_start[c2], plan.t_end[c2]):
                continue
            b, b2 = int(plan.beam[c]), int(plan.beam[c2])
            if b == b2:
                out.append(Violation(int(c), "beam-overlap", f"shares beam {b} with cell {c2} in overlapping slots"))
            elif tuples is not None and tuples.contains(int(c), b, int(c2), b2):
                out.append(Violation(int(c), "interference", f"tuple ({c},{b},{c2},{b2}) active with overlap"))
    return out
