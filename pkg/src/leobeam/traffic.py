"""Poisson arrivals, gateway queues and the per-slot service rate."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

ARRIVAL_STREAM = 1
MAP_STREAM = 2
CHUNK = 1024


@dataclass(frozen=True)
class TrafficSpec:
    mean_rates: np.ndarray
    packet_size: float = 1e6  # bits
    rng_seed: int = 0

    def __post_init__(self):
        rates = np.asarray(self.mean_rates, dtype=float)
        if np.any(rates < 0):
            raise ValueError("mean arrival rates must be non-negative")
        if self.packet_size <= 0:
            raise ValueError("packet_size must be positive")
        object.__setattr__(self, "mean_rates", rates)

    @property
    def cell_count(self) -> int:
        return len(self.mean_rates)


@dataclass
class QueueState:
    q: np.ndarray
    epoch_index: int = 1

    @classmethod
    def empty(cls, n_cells: int) -> "QueueState":
        return cls(np.zeros(n_cells), 1)


class ArrivalStream:
    """Counter-based Poisson draws, keyed by (seed, cell, chunk of epochs).

    Each cell gets its own generator so the sequence never depends on what
    the scheduler does or on how many other cells exist.
    """

    def __init__(self, spec: TrafficSpec):
        self.spec = spec
        self._chunks: dict = {}

    def _chunk(self, c: int, k: int) -> np.ndarray:
        key = (c, k)
        if key not in self._chunks:
            rng = np.random.default_rng([self.spec.rng_seed, ARRIVAL_STREAM, c, k])
            self._chunks[key] = rng.poisson(self.spec.mean_rates[c], CHUNK).astype(float)
            # keep memory flat on long runs
            stale = [kk for kk in self._chunks if kk[0] == c and kk[1] < k - 1]
            for kk in stale:
                del self._chunks[kk]
        return self._chunks[key]

    def draw(self, f: int) -> np.ndarray:
        if f < 1:
            raise ValueError("epoch index starts at 1")
        k, i = divmod(f - 1, CHUNK)
        return np.array([self._chunk(c, k)[i] for c in range(self.spec.cell_count)])


def draw_arrivals(spec: TrafficSpec, f: int) -> np.ndarray:
    """A_{c,f} for all cells. Pure in (spec, f)."""
    return ArrivalStream(spec).draw(f)


def service_rate(snr_db: float, bandwidth_hz: float, slot_duration_s: float,
                 packet_size_bits: float, served: bool = True) -> float:
    """Packets per slot on a beam at the target SNR."""
    if not served:
        return 0.0
    snr = 10.0 ** (snr_db / 10.0)
    return bandwidth_hz * math.log2(1.0 + snr) * slot_duration_s / packet_size_bits


def update_queues(state: QueueState, durations, rates, arrivals) -> QueueState:
    """Q' = max(Q - t R, 0) + A, elementwise."""
    t = np.asarray(durations, dtype=float)
    r = np.asarray(rates, dtype=float)
    a = np.asarray(arrivals, dtype=float)
    q = np.maximum(state.q - t * r, 0.0) + a
    return QueueState(q, state.epoch_index + 1)


def served_packets(q, durations, rates) -> np.ndarray:
    return np.minimum(np.asarray(q, dtype=float), np.asarray(durations) * np.asarray(rates))


def smooth_traffic_map(positions_km: np.ndarray, total_rate: float, seed: int,
                       correlation_km: float = 80.0, spread: float = 0.6) -> np.ndarray:
    """Unbalanced per-cell mean rates from a smoothed random field.

    ``positions_km`` are planar (or ECEF) cell centers. The result is
    positive and sums to ``total_rate``.
    """
    n = len(positions_km)
    if n == 0:
        return np.zeros(0)
    rng = np.random.default_rng([seed, MAP_STREAM])
    white = rng.standard_normal(n)
    d = np.linalg.norm(positions_km[:, None, :] - positions_km[None, :, :], axis=-1)
    k = np.exp(-(d / correlation_km) ** 2)
    field_ = k @ white / k.sum(axis=1)
    std = field_.std()
    z = (field_ - field_.mean()) / std if std > 0 else np.zeros(n)
    w = np.exp(spread * z)
    return total_rate * w / w.sum()


def save_traffic_map(path, rates) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cell_id", "a_c"])
        for c, a in enumerate(rates):
            w.writerow([c, repr(float(a))])


def load_traffic_map(path, n_cells: int | None = None) -> np.ndarray:
    rows = {}
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows[int(rec["cell_id"])] = float(rec["a_c"])
    n = n_cells if n_cells is not None else (max(rows) + 1 if rows else 0)
    missing = [c for c in range(n) if c not in rows]
    if missing:
        raise ValueError(f"traffic map lacks cells {missing}")
    extra = sorted(c for c in rows if not 0 <= c < n)
    if extra:
        raise ValueError(f"traffic map has unknown cells {extra}")
    return np.array([rows[c] for c in range(n)])
