"""
Constellation, cell grid and per-epoch geometry.

Circular two-body orbits over a spherical, uniformly rotating Earth. The
inertial frame coincides with the Earth-fixed frame at t = 0. All lengths
are km, all public angles are degrees.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

EARTH_RADIUS_KM = 6371.0
MU_EARTH = 398600.4418  # km^3/s^2
EARTH_ROTATION_RATE = 7.2921159e-5  # rad/s


@dataclass(frozen=True)
class ConstellationSpec:
    """Walker-style shell description.

    ``raan_spacing_deg`` and ``in_plane_spacing_deg`` default to an even
    spread over 360 degrees; regional test shells override them.
    ``phasing_offset`` is the phase shift between adjacent planes as a
    fraction of the in-plane spacing (None means Walker-delta F=1).
    """
    orbit_count: int
    sats_per_orbit: int
    altitude_km: float
    inclination_deg: float
    phasing_offset: float | None = None
    epoch_duration_ms: float = 120.0
    raan_spacing_deg: float | None = None
    in_plane_spacing_deg: float | None = None
    raan0_deg: float = 0.0
    anomaly0_deg: float = 0.0
    earth_rotation: bool = True

    def __post_init__(self):
        if self.orbit_count < 1 or self.sats_per_orbit < 1:
            raise ValueError("orbit_count and sats_per_orbit must be >= 1")
        if self.altitude_km <= 0:
            raise ValueError("altitude_km must be positive")
        if not 0.0 <= self.inclination_deg <= 180.0:
            raise ValueError("inclination_deg must lie in [0, 180]")
        if self.epoch_duration_ms <= 0:
            raise ValueError("epoch_duration_ms must be positive")

    @property
    def satellite_count(self) -> int:
        return self.orbit_count * self.sats_per_orbit

    @property
    def epoch_duration_s(self) -> float:
        return self.epoch_duration_ms / 1000.0


@dataclass(frozen=True)
class OrbitalElements:
    """Vectorised circular-orbit elements, one entry per satellite."""
    raan_rad: np.ndarray
    u0_rad: np.ndarray
    plane: np.ndarray
    slot: np.ndarray
    inclination_rad: float
    radius_km: float
    earth_rotation_rate: float

    def __len__(self) -> int:
        return len(self.raan_rad)

    @property
    def mean_motion(self) -> float:
        return math.sqrt(MU_EARTH / self.radius_km ** 3)

    @property
    def period_s(self) -> float:
        return 2.0 * math.pi / self.mean_motion

    @property
    def orbital_speed(self) -> float:
        return math.sqrt(MU_EARTH / self.radius_km)


@dataclass(frozen=True)
class Cell:
    id: int
    center_ecef: np.ndarray
    mean_arrival_rate: float = 0.0

    def __post_init__(self):
        if self.mean_arrival_rate < 0:
            raise ValueError("mean_arrival_rate must be >= 0")


@dataclass(frozen=True)
class CellGrid:
    cells: list
    center_lat_lon: tuple
    rows: int
    cols: int
    inter_center_distance: float
    lat_deg: np.ndarray
    lon_deg: np.ndarray

    @property
    def cell_radius(self) -> float:
        # circumradius of a hexagon in a packing with this center spacing
        return self.inter_center_distance / math.sqrt(3.0)

    @property
    def positions(self) -> np.ndarray:
        return np.array([c.center_ecef for c in self.cells])

    def __len__(self) -> int:
        return len(self.cells)

    def with_rates(self, rates: Sequence[float]) -> "CellGrid":
        if len(rates) != len(self.cells):
            raise ValueError("one rate per cell is required")
        cells = [replace(c, mean_arrival_rate=float(a)) for c, a in zip(self.cells, rates)]
        return replace(self, cells=cells)


@dataclass(frozen=True)
class SatelliteState:
    sat_id: int
    position_ecef: np.ndarray
    velocity_ecef: np.ndarray


@dataclass
class EpochGeometry:
    """Snapshot of one scheduling epoch; satellites are frozen within it."""
    epoch_index: int
    time_s: float
    sat_pos: np.ndarray
    sat_vel: np.ndarray
    cell_pos: np.ndarray
    elevation: np.ndarray
    visibility: np.ndarray
    slant_range: np.ndarray
    min_elevation_deg: float
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def sat_states(self) -> list:
        return [SatelliteState(i, p, v) for i, (p, v) in enumerate(zip(self.sat_pos, self.sat_vel))]

    @property
    def active_sats(self) -> np.ndarray:
        """Indices of satellites visible from at least one cell."""
        if "active" not in self._cache:
            self._cache["active"] = np.flatnonzero(self.visibility.any(axis=0))
        return self._cache["active"]

    def theta_tr(self, sats: np.ndarray) -> np.ndarray:
        """Transmit off-axis angles, shape (len(sats), C_target, C_victim).

        Entry [i, t, v] is the angle at satellite ``sats[i]`` between its beam
        aimed at cell ``t`` and the direction to cell ``v``.
        """
        key = ("tr", tuple(np.asarray(sats).tolist()))
        if key not in self._cache:
            sp = self.sat_pos[sats][:, None, :]
            to_cells = self.cell_pos[None, :, :] - sp  # (S, C, 3)
            self._cache[key] = angle_between(to_cells[:, :, None, :], to_cells[:, None, :, :])
        return self._cache[key]

    def theta_re(self, sats: np.ndarray) -> np.ndarray:
        """Receive off-axis angles, shape (C, len(sats), len(sats)).

        Entry [c, i, j] is the angle at cell ``c`` between serving satellite
        ``sats[i]`` and interfering satellite ``sats[j]``.
        """
        key = ("re", tuple(np.asarray(sats).tolist()))
        if key not in self._cache:
            to_sats = self.sat_pos[sats][None, :, :] - self.cell_pos[:, None, :]  # (C, S, 3)
            self._cache[key] = angle_between(to_sats[:, :, None, :], to_sats[:, None, :, :])
        return self._cache[key]


def angle_between(u, v) -> np.ndarray:
    """Angle in degrees between vectors along the last axis (broadcasting)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    cross = np.linalg.norm(np.cross(u, v), axis=-1)
    dot = np.sum(u * v, axis=-1)
    return np.degrees(np.arctan2(cross, dot))


def geodetic_to_ecef(lat_deg, lon_deg, alt_km=0.0) -> np.ndarray:
    lat = np.radians(lat_deg)
    lon = np.radians(lon_deg)
    r = EARTH_RADIUS_KM + np.asarray(alt_km, dtype=float)
    return np.stack([
        r * np.cos(lat) * np.cos(lon),
        r * np.cos(lat) * np.sin(lon),
        r * np.sin(lat) * np.ones_like(lon),
    ], axis=-1)


def build_constellation(spec: ConstellationSpec) -> OrbitalElements:
    """Circular orbits, evenly spaced in RAAN and in-plane phase."""
    P, N = spec.orbit_count, spec.sats_per_orbit
    raan_step = 360.0 / P if spec.raan_spacing_deg is None else spec.raan_spacing_deg
    phase_step = 360.0 / N if spec.in_plane_spacing_deg is None else spec.in_plane_spacing_deg
    frac = 1.0 / P if spec.phasing_offset is None else spec.phasing_offset
    plane, slot = np.divmod(np.arange(P * N), N)
    raan = spec.raan0_deg + plane * raan_step
    u0 = spec.anomaly0_deg + slot * phase_step + plane * frac * phase_step
    return OrbitalElements(
        raan_rad=np.radians(np.mod(raan, 360.0)),
        u0_rad=np.radians(np.mod(u0, 360.0)),
        plane=plane,
        slot=slot,
        inclination_rad=math.radians(spec.inclination_deg),
        radius_km=EARTH_RADIUS_KM + spec.altitude_km,
        earth_rotation_rate=EARTH_ROTATION_RATE if spec.earth_rotation else 0.0,
    )


def align_to_point(spec: ConstellationSpec, lat_deg: float, lon_deg: float,
                   t_align_s: float = 0.0) -> ConstellationSpec:
    """Shift RAAN/phase so satellite 0 is overhead (lat, lon) at ``t_align_s``.

    The pass is the ascending one. Raises if the latitude is unreachable for
    the shell inclination.
    """
    inc = math.radians(spec.inclination_deg)
    s = math.sin(math.radians(lat_deg)) / math.sin(inc) if math.sin(inc) > 0 else 2.0
    if abs(s) > 1.0:
        raise ValueError(f"latitude {lat_deg} not reachable with inclination {spec.inclination_deg}")
    u = math.asin(s)
    dlon = math.atan2(math.cos(inc) * math.sin(u), math.cos(u))
    omega_e = EARTH_ROTATION_RATE if spec.earth_rotation else 0.0
    n = math.sqrt(MU_EARTH / (EARTH_RADIUS_KM + spec.altitude_km) ** 3)
    raan = math.radians(lon_deg) - dlon + omega_e * t_align_s
    u0 = u - n * t_align_s
    return replace(spec, raan0_deg=math.degrees(raan) % 360.0, anomaly0_deg=math.degrees(u0) % 360.0)


def inertial_state(elements: OrbitalElements, t_s: float):
    """Inertial positions and velocities at time ``t_s`` (km, km/s)."""
    n = elements.mean_motion
    u = elements.u0_rad + n * t_s
    O = elements.raan_rad
    i = elements.inclination_rad
    r = elements.radius_km
    cu, su, cO, sO, ci, si = np.cos(u), np.sin(u), np.cos(O), np.sin(O), math.cos(i), math.sin(i)
    pos = r * np.stack([cO * cu - sO * su * ci, sO * cu + cO * su * ci, su * si], axis=-1)
    vel = r * n * np.stack([-cO * su - sO * cu * ci, -sO * su + cO * cu * ci, cu * si], axis=-1)
    return pos, vel


def earth_fixed_state(elements: OrbitalElements, t_s: float):
    pos, vel = inertial_state(elements, t_s)
    w = elements.earth_rotation_rate
    th = w * t_s
    c, s = math.cos(th), math.sin(th)
    rot = np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])
    pos_f = pos @ rot.T
    vel_f = vel @ rot.T - np.cross(np.array([0.0, 0.0, w]), pos_f)
    return pos_f, vel_f


def elevation_deg(cell_pos, sat_pos) -> np.ndarray:
    """Elevation of satellites above the local horizon of cells.

    ``cell_pos`` (..., 3) and ``sat_pos`` (..., 3) broadcast against each other.
    """
    cell_pos = np.asarray(cell_pos, dtype=float)
    d = np.asarray(sat_pos, dtype=float) - cell_pos
    up = cell_pos / np.linalg.norm(cell_pos, axis=-1, keepdims=True)
    sin_el = np.sum(d * up, axis=-1) / np.linalg.norm(d, axis=-1)
    return np.degrees(np.arcsin(np.clip(sin_el, -1.0, 1.0)))


def elevation_angle(cell: Cell, sat: SatelliteState) -> float:
    return float(elevation_deg(cell.center_ecef, sat.position_ecef))


def offaxis_tx(boresight, sat_position, cell_center) -> np.ndarray:
    """Angle between a beam boresight and the satellite->cell direction."""
    d = np.asarray(cell_center, dtype=float) - np.asarray(sat_position, dtype=float)
    return angle_between(boresight, d)


def offaxis_rx(serving_sat_position, interfering_sat_position, cell_center) -> np.ndarray:
    """Angle at the cell between its serving and an interfering satellite."""
    c = np.asarray(cell_center, dtype=float)
    a = np.asarray(serving_sat_position, dtype=float) - c
    b = np.asarray(interfering_sat_position, dtype=float) - c
    return angle_between(a, b)


def build_cell_grid(center_lat: float, center_lon: float, rows: int, cols: int,
                    spacing_km: float = 50.0) -> CellGrid:
    """Hexagonal rows x cols layout on the local tangent plane.

    Odd rows are shifted by half a spacing; row pitch is spacing*sqrt(3)/2.
    """
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    r, k = np.divmod(np.arange(rows * cols), cols)
    x = k * spacing_km + (r % 2) * spacing_km / 2.0
    y = r * spacing_km * math.sqrt(3.0) / 2.0
    x = x - x.mean()
    y = y - y.mean()
    lat = center_lat + np.degrees(y / EARTH_RADIUS_KM)
    lon = center_lon + np.degrees(x / (EARTH_RADIUS_KM * math.cos(math.radians(center_lat))))
    pos = geodetic_to_ecef(lat, lon)
    cells = [Cell(i, pos[i]) for i in range(rows * cols)]
    return CellGrid(cells, (center_lat, center_lon), rows, cols, spacing_km, lat, lon)


def propagate(elements: OrbitalElements, epoch_index: int, epoch_duration_s: float,
              cell_pos: np.ndarray, min_elevation_deg: float = 40.0) -> EpochGeometry:
    """Geometry frozen at t = (f - 1) * epoch_duration."""
    if epoch_index < 1:
        raise ValueError("epoch_index starts at 1")
    t = (epoch_index - 1) * epoch_duration_s
    pos, vel = earth_fixed_state(elements, t)
    cell_pos = np.asarray(cell_pos, dtype=float)
    el = elevation_deg(cell_pos[:, None, :], pos[None, :, :])
    rng = np.linalg.norm(pos[None, :, :] - cell_pos[:, None, :], axis=-1)
    return EpochGeometry(epoch_index, t, pos, vel, cell_pos, el, el >= min_elevation_deg,
                         rng, min_elevation_deg)


def slant_range_at_elevation(altitude_km: float, elevation_deg_: float) -> float:
    """Cell-to-satellite distance for a satellite seen at the given elevation."""
    e = math.radians(elevation_deg_)
    re = EARTH_RADIUS_KM
    r = re + altitude_km
    return -re * math.sin(e) + math.sqrt((re * math.sin(e)) ** 2 + r * r - re * re)


def max_visible_count(elements: OrbitalElements, cell_pos: np.ndarray, min_elevation_deg: float,
                      duration_s: float, step_s: float) -> int:
    """Largest number of satellites simultaneously visible from any cell."""
    cell_pos = np.asarray(cell_pos, dtype=float)
    best = 0
    for t in np.arange(0.0, duration_s + 1e-9, step_s):
        pos, _ = earth_fixed_state(elements, float(t))
        el = elevation_deg(cell_pos[:, None, :], pos[None, :, :])
        best = max(best, int((el >= min_elevation_deg).sum(axis=1).max()))
    return best


def remaining_visibility_s(elements: OrbitalElements, t_s: float, cell_pos: np.ndarray,
                           min_elevation_deg: float, step_s: float, horizon_s: float) -> np.ndarray:
    """Seconds each satellite stays visible from each cell, looking forward.

    Shape (C, S); zero where not visible now, ``horizon_s`` when it never sets
    within the horizon. Resolution is ``step_s``.
    """
    cell_pos = np.asarray(cell_pos, dtype=float)
    C, S = len(cell_pos), len(elements)
    remaining = np.zeros((C, S))
    alive = np.ones((C, S), dtype=bool)
    for k, dt in enumerate(np.arange(0.0, horizon_s + 1e-9, step_s)):
        pos, _ = earth_fixed_state(elements, t_s + float(dt))
        vis = elevation_deg(cell_pos[:, None, :], pos[None, :, :]) >= min_elevation_deg
        alive &= vis
        if not alive.any():
            break
        if k > 0:
            remaining[alive] = dt
    return remaining


def write_ephemeris_csv(path, geometries: Iterable[EpochGeometry]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch_index", "sat_id", "x_km", "y_km", "z_km"])
        for g in geometries:
            for s, p in enumerate(g.sat_pos):
                w.writerow([g.epoch_index, s, repr(float(p[0])), repr(float(p[1])), repr(float(p[2]))])
