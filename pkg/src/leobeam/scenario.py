"""Scenario files: TOML with one table per subsystem.

Unknown keys and bad values raise ScenarioError naming the dotted key and,
when the text is available, its line number.
"""
from __future__ import annotations

import copy
import hashlib
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import tomli

from .baselines import SATELLITE_SCHEMES, TIME_FREQUENCY_SCHEMES

SCHEMA = {
    "name": str,
    "run": {"epochs": int, "seed": int, "output_dir": str},
    "constellation": {
        "orbit_count": int, "sats_per_orbit": int, "altitude_km": float, "inclination_deg": float,
        "phasing_offset": float, "epoch_duration_ms": float, "raan_spacing_deg": float,
        "in_plane_spacing_deg": float, "raan0_deg": float, "anomaly0_deg": float,
        "earth_rotation": bool, "min_elevation_deg": float, "align_to_grid": bool, "align_time_s": float,
    },
    "grid": {"center_lat_deg": float, "center_lon_deg": float, "rows": int, "cols": int,
             "spacing_km": float},
    "spectrum": {"beams_per_sat": int, "subband_count": int, "beam_bandwidth_hz": float,
                 "center_frequency_hz": float},
    "antenna": {"g_max_dbi": float, "g_min_dbi": float, "footprint_radius_km": float,
                "theta_3db_deg": float, "ue_dish_diameter_m": float, "g_user_boresight_dbi": float},
    "budget": {"noise_power_dbw": float, "target_snr_db": float, "inr_threshold_db": float,
               "h_min": (float, str), "h_min_db": float, "s_max": (int, str),
               "atmospheric_margin_db": float},
    "traffic": {"load": float, "packet_size_bits": float, "map_seed": int, "map_file": str,
                "correlation_km": float, "spread": float, "rates": list},
    "scheduler": {"V": float, "d_max_slots": float, "slots_per_epoch": int, "realloc_period": int,
                  "sa": {"t1": float, "t2": float, "rho": float, "moves_per_temperature": int,
                         "reassign": str}},
    "baseline": {"time_frequency_scheme": str, "satellite_scheme": str},
}

DEFAULTS = {
    "name": "scenario",
    "run": {"epochs": 100, "seed": 0, "output_dir": "runs"},
    "constellation": {"phasing_offset": None, "epoch_duration_ms": 120.0, "raan_spacing_deg": None,
                      "in_plane_spacing_deg": None, "raan0_deg": 0.0, "anomaly0_deg": 0.0,
                      "earth_rotation": True, "min_elevation_deg": 40.0, "align_to_grid": False,
                      "align_time_s": 0.0},
    "grid": {"spacing_km": 50.0},
    "spectrum": {"subband_count": None, "beam_bandwidth_hz": 500e6, "center_frequency_hz": 30e9},
    "antenna": {"g_max_dbi": 30.0, "g_min_dbi": 0.0, "footprint_radius_km": 43.3, "theta_3db_deg": None,
                "ue_dish_diameter_m": 0.6, "g_user_boresight_dbi": 35.0},
    "budget": {"noise_power_dbw": -114.6, "target_snr_db": 20.0, "inr_threshold_db": -10.0,
               "h_min": "auto", "h_min_db": None, "s_max": "auto", "atmospheric_margin_db": 0.0},
    "traffic": {"load": 0.7, "packet_size_bits": 1e6, "map_seed": 0, "map_file": None,
                "correlation_km": 80.0, "spread": 0.6, "rates": None},
    "scheduler": {"V": 1000.0, "d_max_slots": 50.0, "slots_per_epoch": 15, "realloc_period": 600,
                  "sa": {"t1": 100.0, "t2": 1.0, "rho": 0.95, "moves_per_temperature": 1,
                         "reassign": "visibility"}},
    "baseline": {"time_frequency_scheme": "proposed", "satellite_scheme": "proposed_sa"},
}

REQUIRED = [
    "constellation.orbit_count", "constellation.sats_per_orbit", "constellation.altitude_km",
    "constellation.inclination_deg", "grid.center_lat_deg", "grid.center_lon_deg", "grid.rows",
    "grid.cols", "spectrum.beams_per_sat",
]

ALIASES = {"V": "scheduler.V", "seed": "run.seed", "epochs": "run.epochs", "load": "traffic.load",
           "d_max": "scheduler.d_max_slots", "T": "scheduler.slots_per_epoch"}


class ScenarioError(ValueError):
    def __init__(self, key: str, message: str, line: int | None = None):
        self.key = key
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{key}{where}: {message}")


def _find_line(text: str | None, key: str) -> int | None:
    if not text:
        return None
    leaf = key.split(".")[-1]
    pat = re.compile(rf"^\s*{re.escape(leaf)}\s*=")
    for i, ln in enumerate(text.splitlines(), 1):
        if pat.match(ln):
            return i
    head = re.compile(rf"^\s*\[\s*{re.escape(key)}\s*\]")
    for i, ln in enumerate(text.splitlines(), 1):
        if head.match(ln):
            return i
    return None


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _check_types(raw: dict, schema: dict, text, prefix=""):
    for k, v in raw.items():
        key = f"{prefix}{k}"
        if k not in schema:
            raise ScenarioError(key, "unknown key", _find_line(text, key))
        want = schema[k]
        if v is None:  # unset optional value carried over from the defaults
            continue
        if isinstance(want, dict):
            if not isinstance(v, dict):
                raise ScenarioError(key, "expected a table", _find_line(text, key))
            _check_types(v, want, text, key + ".")
            continue
        types = want if isinstance(want, tuple) else (want,)
        ok = any(isinstance(v, t) and not (t in (int, float) and isinstance(v, bool)) for t in types)
        if not ok and float in types and isinstance(v, int) and not isinstance(v, bool):
            ok = True
        if not ok:
            names = " or ".join(t.__name__ for t in types)
            raise ScenarioError(key, f"expected {names}, got {type(v).__name__}", _find_line(text, key))


def _get(d: dict, dotted: str):
    cur = d
    for part in dotted.split("."):
        if not isinstance(cur, dict) or part not in cur:
            return None
        cur = cur[part]
    return cur


def _set(d: dict, dotted: str, value) -> None:
    parts = dotted.split(".")
    cur = d
    for part in parts[:-1]:
        cur = cur.setdefault(part, {})
    cur[parts[-1]] = value


@dataclass
class Scenario:
    """Validated scenario. ``raw`` holds the merged table (defaults applied)."""
    raw: dict
    source: str | None = None
    text: str | None = field(default=None, repr=False)

    def __getitem__(self, dotted: str):
        return _get(self.raw, dotted)

    @property
    def name(self) -> str:
        return self.raw["name"]

    @property
    def seed(self) -> int:
        return self.raw["run"]["seed"]

    @property
    def epochs(self) -> int:
        return self.raw["run"]["epochs"]

    def digest(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def with_values(self, **dotted) -> "Scenario":
        raw = copy.deepcopy(self.raw)
        for k, v in dotted.items():
            _set(raw, ALIASES.get(k, k), v)
        return validate(raw, self.text, self.source)

    def override(self, param: str, value) -> "Scenario":
        return self.with_values(**{param: value})


def validate(raw: dict, text: str | None = None, source: str | None = None) -> Scenario:
    _check_types(raw, SCHEMA, text)
    merged = _merge(DEFAULTS, raw)
    for key in REQUIRED:
        if _get(merged, key) is None:
            raise ScenarioError(key, "missing required key", _find_line(text, key.split(".")[0]))

    def fail(key, msg):
        raise ScenarioError(key, msg, _find_line(text, key))

    c = merged["constellation"]
    if c["orbit_count"] < 1:
        fail("constellation.orbit_count", "must be >= 1")
    if c["sats_per_orbit"] < 1:
        fail("constellation.sats_per_orbit", "must be >= 1")
    if c["altitude_km"] <= 0:
        fail("constellation.altitude_km", "must be positive")
    if not 0 <= c["inclination_deg"] <= 180:
        fail("constellation.inclination_deg", "must lie in [0, 180]")
    if c["epoch_duration_ms"] <= 0:
        fail("constellation.epoch_duration_ms", "must be positive")
    g = merged["grid"]
    if g["rows"] < 1 or g["cols"] < 1:
        fail("grid.rows", "rows and cols must be >= 1")
    if g["spacing_km"] <= 0:
        fail("grid.spacing_km", "must be positive")
    sp = merged["spectrum"]
    if sp["beams_per_sat"] < 1:
        fail("spectrum.beams_per_sat", "must be >= 1")
    if sp["subband_count"] is not None and sp["subband_count"] < sp["beams_per_sat"]:
        fail("spectrum.subband_count", "needs at least one subband per beam of a satellite")
    b = merged["budget"]
    if isinstance(b["h_min"], str) and b["h_min"] != "auto":
        fail("budget.h_min", "must be a number in (0, 1] or \"auto\"")
    if not isinstance(b["h_min"], str) and not 0 < b["h_min"] <= 1:
        fail("budget.h_min", "must lie in (0, 1]")
    if b["h_min_db"] is not None and b["h_min_db"] > 0:
        fail("budget.h_min_db", "must be <= 0 dB")
    if isinstance(b["s_max"], str) and b["s_max"] != "auto":
        fail("budget.s_max", "must be an integer >= 1 or \"auto\"")
    if not isinstance(b["s_max"], str) and b["s_max"] < 1:
        fail("budget.s_max", "must be >= 1")
    t = merged["traffic"]
    if t["load"] < 0:
        fail("traffic.load", "must be >= 0")
    if t["packet_size_bits"] <= 0:
        fail("traffic.packet_size_bits", "must be positive")
    if t["rates"] is not None:
        if len(t["rates"]) != g["rows"] * g["cols"] or any(float(r) < 0 for r in t["rates"]):
            fail("traffic.rates", "need one non-negative rate per cell")
    s = merged["scheduler"]
    if s["V"] < 0:
        fail("scheduler.V", "must be >= 0")
    if s["d_max_slots"] < 1:
        fail("scheduler.d_max_slots", "must be >= 1")
    if s["slots_per_epoch"] < 1:
        fail("scheduler.slots_per_epoch", "must be >= 1")
    if s["realloc_period"] < 1:
        fail("scheduler.realloc_period", "must be >= 1")
    sa = s["sa"]
    if not sa["t1"] > sa["t2"] > 0:
        fail("scheduler.sa.t1", "need t1 > t2 > 0")
    if not 0 < sa["rho"] < 1:
        fail("scheduler.sa.rho", "must lie in (0, 1)")
    if sa["moves_per_temperature"] < 1:
        fail("scheduler.sa.moves_per_temperature", "must be >= 1")
    if sa["reassign"] not in ("visibility", "elevation"):
        fail("scheduler.sa.reassign", "must be \"visibility\" or \"elevation\"")
    bl = merged["baseline"]
    if bl["time_frequency_scheme"] not in TIME_FREQUENCY_SCHEMES:
        fail("baseline.time_frequency_scheme", f"must be one of {', '.join(TIME_FREQUENCY_SCHEMES)}")
    if bl["satellite_scheme"] not in SATELLITE_SCHEMES:
        fail("baseline.satellite_scheme", f"must be one of {', '.join(SATELLITE_SCHEMES)}")
    r = merged["run"]
    if r["epochs"] < 1:
        fail("run.epochs", "must be >= 1")
    return Scenario(merged, source, text)


def loads(text: str, source: str | None = None) -> Scenario:
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ScenarioError("<syntax>", str(exc), int(m.group(1)) if m else None) from None
    return validate(raw, text, source)


def load_scenario(path) -> Scenario:
    p = Path(path)
    if not p.exists():
        shipped = builtin_scenario_path(p.name)
        if shipped is None:
            raise FileNotFoundError(path)
        p = shipped
    return loads(p.read_text(), str(p))


def builtin_scenario_path(name: str):
    """Path of a scenario shipped with the package, or None."""
    if not name.endswith(".scenario"):
        name = name + ".scenario"
    res = resources.files("leobeam").joinpath("scenarios", name)
    return Path(str(res)) if res.is_file() else None
