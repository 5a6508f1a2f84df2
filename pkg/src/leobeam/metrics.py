"""
Revisit-time and handover accounting, the auxiliary ratio eta, and the
per-epoch drift-plus-penalty objective gamma.

Slots are numbered 1..T inside an epoch. A cell that gets no beam in an
epoch is booked as if its service started one slot past the epoch end;
its reference end slot then moves to T. Summed over the skipped stretch
this books exactly the true gap, so running means stay exact.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

METRIC_FIELDS = ["f", "mean_revisit", "mean_queue", "delta_f", "handovers_cum", "gamma", "p0",
                 "served_cells", "dmax_violations"]


def revisit_time(t_start: int, t_end_prev: int, T: int) -> int:
    """Slots between the previous end and this start."""
    return t_start + T - t_end_prev - 1


def handover_count(beta_prev, beta_now) -> int:
    """Cells whose serving satellite changed; an unserved row counts as a change."""
    a = np.asarray(beta_prev)
    b = np.asarray(beta_now)
    return int(np.sum(1 - np.sum(a * b, axis=1)))


def sats_to_beta(sats, n_sats: int) -> np.ndarray:
    sats = np.asarray(sats)
    beta = np.zeros((len(sats), n_sats), dtype=np.int64)
    ok = sats >= 0
    beta[np.flatnonzero(ok), sats[ok]] = 1
    return beta


def handover_from_sats(prev_sats, now_sats) -> int:
    prev = np.asarray(prev_sats)
    now = np.asarray(now_sats)
    return int(np.sum((prev < 0) | (now < 0) | (prev != now)))


def eta(d_history, delta_history, f: int, n_cells: int) -> np.ndarray:
    """eta_{c,f} from per-epoch revisit rows and handover counts of epochs 1..f-1."""
    if f <= 1:
        return np.zeros(n_cells)
    d = np.asarray(d_history, dtype=float)[: f - 1]
    dl = np.asarray(delta_history, dtype=float)[: f - 1]
    den = np.sum(1.0 + n_cells - dl)
    return d.sum(axis=0) / den


def gamma_value(V: float, d_tilde, eta_c, delta_tilde: float, rq, durations) -> float:
    """Sum_c V (D~ - eta (1 + C - delta~)) - R Q t."""
    d_tilde = np.asarray(d_tilde, dtype=float)
    C = len(d_tilde)
    pen = V * (d_tilde - np.asarray(eta_c) * (1.0 + C - delta_tilde))
    return float(np.sum(pen - np.asarray(rq) * np.asarray(durations)))


def p0_objective(d_tilde, delta_tilde: float) -> float:
    d_tilde = np.asarray(d_tilde, dtype=float)
    return float(d_tilde.sum() / (1.0 + len(d_tilde) - delta_tilde))


@dataclass
class Trackers:
    """History needed to score candidate plans for the current epoch ``f``."""
    n_cells: int
    T: int
    d_max: float
    f: int = 1
    e_ref: np.ndarray = None
    last_end_abs: np.ndarray = None
    d_sum: np.ndarray = None
    eta_den: float = 0.0
    delta_sum: float = 0.0
    prev_sats: np.ndarray = None
    handovers_cum: int = 0
    d_last: np.ndarray = None

    def __post_init__(self):
        C = self.n_cells
        if self.e_ref is None:
            self.e_ref = np.full(C, self.T, dtype=np.int64)
        if self.last_end_abs is None:
            self.last_end_abs = np.zeros(C, dtype=np.int64)
        if self.d_sum is None:
            self.d_sum = np.zeros(C)
        if self.d_last is None:
            self.d_last = np.zeros(C)

    def copy(self) -> "Trackers":
        return Trackers(self.n_cells, self.T, self.d_max, self.f, self.e_ref.copy(),
                        self.last_end_abs.copy(), self.d_sum.copy(), self.eta_den,
                        self.delta_sum, None if self.prev_sats is None else self.prev_sats.copy(),
                        self.handovers_cum, self.d_last.copy())

    # per-epoch quantities for candidate plans
    def eta(self) -> np.ndarray:
        if self.f <= 1 or self.eta_den <= 0:
            return np.zeros(self.n_cells)
        return self.d_sum / self.eta_den

    def revisit(self, t_start, served) -> np.ndarray:
        """Booked D_{c,f} for a candidate start vector."""
        if self.f <= 1:
            return np.zeros(self.n_cells)
        s = np.where(served, t_start, self.T + 1)
        return (s + self.T - self.e_ref - 1).astype(float)

    def revisit_at(self, c: int, t_start: int) -> float:
        if self.f <= 1:
            return 0.0
        return float(t_start + self.T - self.e_ref[c] - 1)

    def true_revisit(self, t_start, served) -> np.ndarray:
        """Slots since the last real service end (or the run start), up to the start."""
        base = (self.f - 1) * self.T - self.last_end_abs
        s = np.where(served, t_start, self.T + 1)
        return (base + s - 1).astype(float)

    def true_revisit_at(self, c: int, t_start: int) -> float:
        return float((self.f - 1) * self.T - self.last_end_abs[c] + t_start - 1)

    def latest_start_for_dmax(self, c: int) -> int:
        """Largest start slot that keeps the true gap within D_max (may be < 1)."""
        return int(np.floor(self.d_max - (self.f - 1) * self.T + self.last_end_abs[c] + 1))

    def d_tilde(self, d_now) -> np.ndarray:
        return (self.d_sum + np.asarray(d_now, dtype=float)) / self.f

    def d_tilde_at(self, c: int, t_start: int) -> float:
        return (self.d_sum[c] + self.revisit_at(c, t_start)) / self.f

    def delta(self, sats_now) -> int:
        if self.f <= 1 or self.prev_sats is None:
            return 0
        return handover_from_sats(self.prev_sats, sats_now)

    def delta_tilde(self, delta_now: float) -> float:
        return (self.delta_sum + delta_now) / self.f

    def gamma(self, plan, rq, V: float) -> float:
        served = plan.served
        d = self.revisit(plan.t_start, served)
        dl = self.delta(plan.realized_sats)
        return gamma_value(V, self.d_tilde(d), self.eta(), self.delta_tilde(dl), rq, plan.durations)

    def commit(self, plan) -> dict:
        """Fold the realized plan of epoch f into the history and advance to f+1."""
        served = plan.served
        d = self.revisit(plan.t_start, served)
        true_d = self.true_revisit(plan.t_start, served)
        dl = self.delta(plan.realized_sats)
        viol = int(np.sum(true_d > self.d_max))
        self.d_sum = self.d_sum + d
        self.eta_den += 1.0 + self.n_cells - dl
        self.delta_sum += dl
        self.handovers_cum += dl
        self.e_ref = np.where(served, plan.t_end, self.T).astype(np.int64)
        abs_end = (self.f - 1) * self.T + plan.t_end
        self.last_end_abs = np.where(served, abs_end, self.last_end_abs).astype(np.int64)
        self.prev_sats = np.asarray(plan.realized_sats).copy()
        self.d_last = d
        out = {"d": d, "true_d": true_d, "delta": dl, "dmax_violations": viol,
               "d_tilde": self.d_sum / self.f, "delta_tilde": self.delta_sum / self.f}
        self.f += 1
        return out


@dataclass
class MetricsLog:
    """Per-epoch rows, optionally streamed to CSV and JSON lines as they arrive."""
    rows: list = field(default_factory=list)
    csv_path: object = None
    jsonl_path: object = None
    _csv_fh: object = field(default=None, repr=False)
    _json_fh: object = field(default=None, repr=False)

    def open(self):
        if self.csv_path is not None:
            self._csv_fh = open(self.csv_path, "w", newline="")
            csv.writer(self._csv_fh).writerow(METRIC_FIELDS)
            self._csv_fh.flush()
        if self.jsonl_path is not None:
            self._json_fh = open(self.jsonl_path, "w")
        return self

    def append(self, row: dict) -> None:
        missing = [k for k in METRIC_FIELDS if k not in row]
        if missing:
            raise ValueError(f"metrics row lacks {', '.join(missing)}")
        self.rows.append(row)
        if self._csv_fh is not None:
            csv.writer(self._csv_fh).writerow([_fmt(row[k]) for k in METRIC_FIELDS])
            self._csv_fh.flush()
        if self._json_fh is not None:
            self._json_fh.write(json.dumps({k: row[k] for k in METRIC_FIELDS}) + "\n")
            self._json_fh.flush()

    def close(self) -> None:
        for fh in (self._csv_fh, self._json_fh):
            if fh is not None:
                fh.close()
        self._csv_fh = self._json_fh = None

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows], dtype=float)


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def read_metrics_csv(path) -> dict:
    with open(path, newline="") as fh:
        recs = list(csv.DictReader(fh))
    return {k: np.array([float(r[k]) for r in recs]) for k in (recs[0].keys() if recs else METRIC_FIELDS)}
