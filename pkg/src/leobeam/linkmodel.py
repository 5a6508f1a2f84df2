"""
Antenna masks, link budget and the pairwise interference tuple set.

Gains are handled in dB at the API surface; interference sums are carried
out in the linear domain and converted once.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import EpochGeometry, angle_between, slant_range_at_elevation

SPEED_OF_LIGHT = 299792458.0
NO_INTERFERENCE = -math.inf


@dataclass(frozen=True)
class AntennaConfig:
    g_max: float = 30.0
    g_min: float = 0.0
    theta_3db: float = 4.128
    ue_dish_diameter: float = 0.6
    wavelength: float = SPEED_OF_LIGHT / 30e9
    g_user_boresight: float = 35.0

    def __post_init__(self):
        if self.theta_3db <= 0:
            raise ValueError("theta_3db must be positive")
        if self.g_max < self.g_min:
            raise ValueError("g_max must not be below g_min")

    @property
    def theta_th(self) -> float:
        return theta_threshold(self.wavelength, self.ue_dish_diameter)


def theta_threshold(wavelength: float, dish_diameter: float) -> float:
    """Inner edge of the user-terminal sidelobe envelope, in degrees."""
    ratio = dish_diameter / wavelength
    if ratio >= 50.0:
        return max(1.0, 100.0 / ratio)
    return max(2.0, 144.0 * ratio ** -1.09)


def theta_3db_for_footprint(footprint_radius_km: float, altitude_km: float) -> float:
    """Half-angle whose nadir footprint has the given radius."""
    return math.degrees(math.atan(footprint_radius_km / altitude_km))


@dataclass(frozen=True)
class SpectrumPlan:
    """Beams (beam_id, sat_id, subband).

    Beam ids are 0..B-1; beams of one satellite sit on distinct subbands.
    """
    beam_sat: np.ndarray
    beam_subband: np.ndarray
    subband_count: int
    beam_bandwidth: float = 500e6
    center_frequency: float = 30e9
    sat_beams: tuple = field(default=(), compare=False)

    def __post_init__(self):
        bs = np.asarray(self.beam_sat, dtype=np.int64)
        sb = np.asarray(self.beam_subband, dtype=np.int64)
        if bs.shape != sb.shape:
            raise ValueError("beam_sat and beam_subband must align")
        if len(sb) and (sb.min() < 0 or sb.max() >= self.subband_count):
            raise ValueError("subband index out of range")
        n_sat = int(bs.max()) + 1 if len(bs) else 0
        groups = tuple(tuple(int(b) for b in np.flatnonzero(bs == s)) for s in range(n_sat))
        for g in groups:
            if len(set(sb[list(g)].tolist())) != len(g):
                raise ValueError("beams of one satellite must use distinct subbands")
        object.__setattr__(self, "beam_sat", bs)
        object.__setattr__(self, "beam_subband", sb)
        object.__setattr__(self, "sat_beams", groups)

    @classmethod
    def uniform(cls, n_sats: int, beams_per_sat: int, subband_count: int | None = None,
                **kw) -> "SpectrumPlan":
        """Beam k of every satellite on subband k."""
        subband_count = beams_per_sat if subband_count is None else subband_count
        beam_sat = np.repeat(np.arange(n_sats), beams_per_sat)
        beam_sub = np.tile(np.arange(beams_per_sat), n_sats) % subband_count
        return cls(beam_sat, beam_sub, subband_count, **kw)

    @property
    def beam_count(self) -> int:
        return len(self.beam_sat)

    @property
    def max_beams_per_sat(self) -> int:
        return max((len(g) for g in self.sat_beams), default=0)

    def beams_of(self, sat: int) -> tuple:
        return self.sat_beams[sat] if sat < len(self.sat_beams) else ()

    def co_frequency(self, b: int) -> np.ndarray:
        return np.flatnonzero(self.beam_subband == self.beam_subband[b])

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.center_frequency


@dataclass(frozen=True)
class LinkBudget:
    noise_power: float = -114.6  # dBW
    target_snr: float = 20.0  # dB
    inr_threshold: float = -10.0  # dB
    h_min: float = 0.5
    s_max: int = 1
    atmospheric_margin: float = 0.0  # dB
    center_frequency: float = 30e9

    def __post_init__(self):
        if not 0.0 < self.h_min <= 1.0:
            raise ValueError("h_min must lie in (0, 1]")
        if self.s_max < 1:
            raise ValueError("s_max must be >= 1")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.center_frequency


@dataclass
class InterferenceTupleSet:
    """Co-frequency (cell, beam, cell', beam') pairs that must not overlap in time.

    ``pair_conflict[c, i, c2, j]`` is the geometric test for cell c served by
    satellite ``sats[i]`` against cell c2 served by ``sats[j]``. Only
    satellites visible from some cell are indexed; a tuple exists for every
    co-frequency beam pair of a flagged satellite pair.
    """
    epoch_index: int
    pair_conflict: np.ndarray
    spectrum: SpectrumPlan
    sats: np.ndarray
    n_sats: int

    def __post_init__(self):
        self.sats = np.asarray(self.sats, dtype=np.int64)
        self._local = np.full(self.n_sats, -1, dtype=np.int64)
        self._local[self.sats] = np.arange(len(self.sats))

    def local_index(self, sat):
        """Position of satellite ids in ``sats`` (-1 when not indexed)."""
        return self._local[sat]

    def pair(self, c: int, s: int, c2: int, s2: int) -> bool:
        i, j = self._local[s], self._local[s2]
        return bool(i >= 0 and j >= 0 and self.pair_conflict[c, i, c2, j])

    def contains(self, c: int, b: int, c2: int, b2: int) -> bool:
        sp = self.spectrum
        if c == c2 or sp.beam_subband[b] != sp.beam_subband[b2]:
            return False
        s, s2 = sp.beam_sat[b], sp.beam_sat[b2]
        return s != s2 and self.pair(c, s, c2, s2)

    @property
    def tuples(self) -> list:
        sp = self.spectrum
        out = []
        for c, i, c2, j in zip(*np.nonzero(self.pair_conflict)):
            for b in sp.beams_of(int(self.sats[i])):
                for b2 in sp.beams_of(int(self.sats[j])):
                    if sp.beam_subband[b] == sp.beam_subband[b2]:
                        out.append((int(c), int(b), int(c2), int(b2)))
        out.sort()
        return out

    def __len__(self) -> int:
        return len(self.tuples)

    def write_csv(self, path, append: bool = False) -> None:
        with open(path, "a" if append else "w", newline="") as fh:
            self.write_rows(csv.writer(fh), header=not append)

    def write_rows(self, writer, header: bool = False) -> None:
        if header:
            writer.writerow(["f", "c", "b", "c2", "b2"])
        for t in self.tuples:
            writer.writerow([self.epoch_index, *t])


def g_user(theta, cfg: AntennaConfig):
    """User-terminal receive gain (dBi) at off-axis angle ``theta`` (deg)."""
    th = np.asarray(theta, dtype=float)
    if np.any(th < 0):
        raise ValueError("off-axis angle must be non-negative")
    tth = cfg.theta_th
    with np.errstate(divide="ignore"):
        side = 36.0 - 25.0 * np.log10(np.maximum(th, 1e-12))
    g = np.where(th < tth, cfg.g_user_boresight,
                 np.where(th < 44.0, side, np.where(th < 75.0, -5.0, 0.0)))
    return float(g) if g.ndim == 0 else g


def g_beam(theta, cfg: AntennaConfig):
    """Satellite spot-beam transmit gain (dBi): flat main lobe, flat sidelobe."""
    th = np.asarray(theta, dtype=float)
    g = np.where(th < cfg.theta_3db, cfg.g_max, cfg.g_min)
    return float(g) if g.ndim == 0 else g


def channel_gain(sat_position, cell_center, budget: LinkBudget):
    """Free-space gain (linear) with a fixed atmospheric margin."""
    d_km = np.linalg.norm(np.asarray(sat_position, dtype=float) - np.asarray(cell_center, dtype=float),
                          axis=-1)
    return channel_gain_at_range(d_km, budget)


def channel_gain_at_range(d_km, budget: LinkBudget):
    d = np.asarray(d_km, dtype=float) * 1000.0
    if np.any(d <= 0):
        raise ValueError("slant range must be positive")
    h = (budget.wavelength / (4.0 * math.pi * d)) ** 2 * 10.0 ** (-budget.atmospheric_margin / 10.0)
    return float(h) if np.ndim(h) == 0 else h


def required_tx_power(h_linear, budget: LinkBudget, cfg: AntennaConfig):
    """Beam power (dBW) that lands exactly the target SNR at the cell center."""
    h_db = 10.0 * np.log10(h_linear)
    p = budget.target_snr + budget.noise_power - cfg.g_max - cfg.g_user_boresight - h_db
    return float(p) if np.ndim(p) == 0 else p


def snr_db(p_dbw, h_linear, budget: LinkBudget, cfg: AntennaConfig):
    return p_dbw + cfg.g_max + cfg.g_user_boresight + 10.0 * np.log10(h_linear) - budget.noise_power


def interference_power(p_dbw, g_tx_dbi, g_rx_dbi, h_linear):
    """Linear interference contribution of one beam."""
    return 10.0 ** ((np.asarray(p_dbw) + np.asarray(g_tx_dbi) + np.asarray(g_rx_dbi)) / 10.0) * h_linear


def inr(contributions, budget: LinkBudget) -> float:
    """INR (dB) from linear interference contributions; -inf when there are none."""
    total = float(np.sum(contributions)) if len(np.atleast_1d(contributions)) else 0.0
    if total <= 0.0:
        return NO_INTERFERENCE
    return 10.0 * math.log10(total) - budget.noise_power


def gain_threshold(budget: LinkBudget) -> float:
    """Allowed gain attenuation (dB) of an interference path relative to boresight.

    A co-frequency pair is tolerable when
    G_beam(tr) + G_user(re) - G_beam(0) - G_user(0) < threshold.
    """
    if budget.h_min <= 0:
        raise ValueError("h_min must be positive")
    return (budget.inr_threshold - budget.target_snr
            - 10.0 * math.log10(budget.s_max / budget.h_min))


def gain_threshold_absolute(budget: LinkBudget, cfg: AntennaConfig) -> float:
    """Same threshold expressed on the absolute G_beam(tr) + G_user(re) sum."""
    return gain_threshold(budget) + cfg.g_max + cfg.g_user_boresight


def geometric_h_min(altitude_km: float, min_elevation_deg: float) -> float:
    """(shortest / longest slant range)^2 inside the visibility cone."""
    d_max = slant_range_at_elevation(altitude_km, min_elevation_deg)
    return (altitude_km / d_max) ** 2


def relative_gain(theta_tr, theta_re, cfg: AntennaConfig):
    return (g_beam(theta_tr, cfg) - cfg.g_max) + (g_user(theta_re, cfg) - cfg.g_user_boresight)


def build_tuple_set(geometry: EpochGeometry, spectrum: SpectrumPlan, budget: LinkBudget,
                    cfg: AntennaConfig) -> InterferenceTupleSet:
    """Conflicting (cell, satellite) pairs for this epoch.

    Only pairs where each satellite is visible to its own cell are candidates.
    The pair is flagged when either victim direction reaches the threshold.
    """
    C, S = geometry.visibility.shape
    act = geometry.active_sats
    A = len(act)
    if A < 2:
        return InterferenceTupleSet(geometry.epoch_index, np.zeros((C, A, C, A), dtype=bool),
                                    spectrum, act, S)
    gth = gain_threshold(budget)
    tr = geometry.theta_tr(act)  # (A, C_target, C_victim)
    re = geometry.theta_re(act)  # (C_victim, A_serving, A_interf)
    g_tx = g_beam(tr, cfg) - cfg.g_max
    g_rx = g_user(re, cfg) - cfg.g_user_boresight
    # victim c served by a, interferer a2 aiming at c2: g_tx[a2, c2, c] + g_rx[c, a, a2]
    val = g_tx.transpose(2, 0, 1)[:, None, :, :] + g_rx[:, :, :, None]  # (c, a, a2, c2)
    hit = (val >= gth).transpose(0, 1, 3, 2)  # (c, a, c2, a2)
    both = hit | hit.transpose(2, 3, 0, 1)
    vis = geometry.visibility[:, act]
    ok = vis[:, :, None, None] & vis[None, None, :, :]
    same_sat = np.eye(A, dtype=bool)[None, :, None, :]
    same_cell = np.eye(C, dtype=bool)[:, None, :, None]
    conflict = both & ok & ~same_sat & ~same_cell
    return InterferenceTupleSet(geometry.epoch_index, conflict, spectrum, act, S)


def realized_inr(plan, geometry: EpochGeometry, spectrum: SpectrumPlan, budget: LinkBudget,
                 cfg: AntennaConfig) -> dict:
    """Worst per-slot INR of every served cell against the co-frequency beams active with it.

    Powers are set per beam to meet the target SNR at its own cell. Also
    reports whether the angle-rule preconditions hold for each cell: visible
    satellites at most ``s_max`` and every channel ratio at least ``h_min``.
    """
    C = len(plan.sat)
    worst = np.full(C, NO_INTERFERENCE)
    precond = np.ones(C, dtype=bool)
    served = np.flatnonzero(plan.served)
    if len(served) == 0:
        return {"inr": worst, "preconditions": precond}
    sat_pos = geometry.sat_pos
    cell_pos = geometry.cell_pos
    sat_of = {int(c): int(spectrum.beam_sat[plan.beam[c]]) for c in served}
    sub_of = {int(c): int(spectrum.beam_subband[plan.beam[c]]) for c in served}
    h_own = {c: channel_gain(sat_pos[s], cell_pos[c], budget) for c, s in sat_of.items()}
    p_of = {c: required_tx_power(h_own[c], budget, cfg) for c in sat_of}
    n_vis = geometry.visibility.sum(axis=1)
    for c in served:
        c = int(c)
        s = sat_of[c]
        others = [x for x in sat_of if x != c and sub_of[x] == sub_of[c] and sat_of[x] != s
                  and plan.t_start[x] <= plan.t_end[c] and plan.t_start[c] <= plan.t_end[x]]
        if n_vis[c] > budget.s_max:
            precond[c] = False
        if not others:
            continue
        contrib = {}
        for x in others:
            s2 = sat_of[x]
            h_cx = channel_gain(sat_pos[s2], cell_pos[c], budget)
            if h_own[x] / h_cx < budget.h_min * (1 - 1e-12):
                precond[c] = False
            th_tr = angle_between(cell_pos[x] - sat_pos[s2], cell_pos[c] - sat_pos[s2])
            th_re = angle_between(sat_pos[s] - cell_pos[c], sat_pos[s2] - cell_pos[c])
            contrib[x] = interference_power(p_of[x], g_beam(th_tr, cfg), g_user(th_re, cfg), h_cx)
        for t in range(int(plan.t_start[c]), int(plan.t_end[c]) + 1):
            active = [contrib[x] for x in others if plan.t_start[x] <= t <= plan.t_end[x]]
            if active:
                worst[c] = max(worst[c], inr(active, budget))
    return {"inr": worst, "preconditions": precond}
