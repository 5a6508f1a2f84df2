"""Epoch loop: geometry, tuple set, scheduling, queue update, metrics."""
from __future__ import annotations

import csv
import json
import math
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import (BaselineChoice, greedy_allocation, maxtime_satellites, minload_satellites,
                        swap_refinement, topsis_satellites)
from .geometry import (ConstellationSpec, align_to_point, build_cell_grid, build_constellation,
                       max_visible_count, propagate, remaining_visibility_s)
from .linkmodel import (SPEED_OF_LIGHT, AntennaConfig, LinkBudget, SpectrumPlan, build_tuple_set,
                        gain_threshold, geometric_h_min, realized_inr, theta_3db_for_footprint)
from .metrics import MetricsLog, Trackers, p0_objective
from .scenario import Scenario
from .scheduler import (EpochContext, SaConfig, plan_feasibility_check, requested_durations,
                        serving_beam_allocation, serving_satellite_allocation,
                        service_time_allocation)
from .traffic import (ArrivalStream, QueueState, TrafficSpec, load_traffic_map, save_traffic_map,
                      service_rate, smooth_traffic_map, update_queues)

STAGES = ("geometry", "tuple_set", "scheduling", "bookkeeping")


class PlanInfeasible(RuntimeError):
    pass


@dataclass
class World:
    """Everything derived once from a scenario."""
    scenario: Scenario
    constellation: ConstellationSpec
    elements: object
    grid: object
    spectrum: SpectrumPlan
    antenna: AntennaConfig
    budget: LinkBudget
    traffic: TrafficSpec
    T: int
    slot_s: float
    rate: float
    V: float
    d_max: float
    realloc_period: int
    sa: SaConfig
    choice: BaselineChoice
    min_elevation_deg: float
    sa_reassign: str = "visibility"

    @property
    def n_cells(self) -> int:
        return len(self.grid)

    @property
    def n_sats(self) -> int:
        return len(self.elements)


def _planar(grid) -> np.ndarray:
    lat0, lon0 = grid.center_lat_lon
    x = np.radians(grid.lon_deg - lon0) * 6371.0 * math.cos(math.radians(lat0))
    y = np.radians(grid.lat_deg - lat0) * 6371.0
    return np.column_stack([x, y])


def build_world(scn: Scenario, seed: int | None = None) -> World:
    r = scn.raw
    c = r["constellation"]
    cspec = ConstellationSpec(
        c["orbit_count"], c["sats_per_orbit"], float(c["altitude_km"]), float(c["inclination_deg"]),
        c["phasing_offset"], float(c["epoch_duration_ms"]), c["raan_spacing_deg"],
        c["in_plane_spacing_deg"], float(c["raan0_deg"]), float(c["anomaly0_deg"]), c["earth_rotation"])
    g = r["grid"]
    if c["align_to_grid"]:
        cspec = align_to_point(cspec, g["center_lat_deg"], g["center_lon_deg"], float(c["align_time_s"]))
    elements = build_constellation(cspec)
    grid = build_cell_grid(g["center_lat_deg"], g["center_lon_deg"], g["rows"], g["cols"], g["spacing_km"])
    sp = r["spectrum"]
    spectrum = SpectrumPlan.uniform(cspec.satellite_count, sp["beams_per_sat"], sp["subband_count"],
                                    beam_bandwidth=float(sp["beam_bandwidth_hz"]),
                                    center_frequency=float(sp["center_frequency_hz"]))
    a = r["antenna"]
    theta = a["theta_3db_deg"]
    if theta is None:
        theta = theta_3db_for_footprint(a["footprint_radius_km"], cspec.altitude_km)
    antenna = AntennaConfig(a["g_max_dbi"], a["g_min_dbi"], theta, a["ue_dish_diameter_m"],
                            SPEED_OF_LIGHT / sp["center_frequency_hz"], a["g_user_boresight_dbi"])
    b = r["budget"]
    min_el = float(c["min_elevation_deg"])
    if b["h_min_db"] is not None:
        h_min = 10.0 ** (b["h_min_db"] / 10.0)
    elif b["h_min"] == "auto":
        h_min = geometric_h_min(cspec.altitude_km, min_el)
    else:
        h_min = float(b["h_min"])
    if b["s_max"] == "auto":
        step = max(cspec.epoch_duration_s, 1.0)
        s_max = max(1, max_visible_count(elements, grid.positions, min_el, elements.period_s, step))
    else:
        s_max = int(b["s_max"])
    budget = LinkBudget(b["noise_power_dbw"], b["target_snr_db"], b["inr_threshold_db"], h_min, s_max,
                        b["atmospheric_margin_db"], sp["center_frequency_hz"])
    s = r["scheduler"]
    T = int(s["slots_per_epoch"])
    slot_s = cspec.epoch_duration_s / T
    t = r["traffic"]
    rate = service_rate(budget.target_snr, spectrum.beam_bandwidth, slot_s, t["packet_size_bits"])
    if t["map_file"]:
        path = Path(t["map_file"])
        if not path.is_absolute() and scn.source:
            path = Path(scn.source).parent / path
        rates = load_traffic_map(path, len(grid))
    elif t["rates"] is not None:
        rates = np.asarray(t["rates"], dtype=float)
    else:
        capacity = sp["beams_per_sat"] * T * rate
        rates = smooth_traffic_map(_planar(grid), t["load"] * capacity, t["map_seed"],
                                   t["correlation_km"], t["spread"])
    run_seed = scn.seed if seed is None else seed
    traffic = TrafficSpec(rates, t["packet_size_bits"], run_seed)
    sa = s["sa"]
    sa_cfg = SaConfig(sa["t1"], sa["t2"], sa["rho"], sa["moves_per_temperature"], run_seed)
    bl = r["baseline"]
    choice = BaselineChoice(bl["time_frequency_scheme"], bl["satellite_scheme"])
    return World(scn, cspec, elements, grid.with_rates(rates), spectrum, antenna, budget, traffic, T,
                 slot_s, rate, float(s["V"]), float(s["d_max_slots"]), int(s["realloc_period"]), sa_cfg,
                 choice, min_el, sa["reassign"])


def make_planner(choice: BaselineChoice, backend=None, on_step=None):
    """Time-frequency scheme as a function (ctx, sats) -> plan.

    ``on_step(gamma_before, gamma_after)`` observes every service-time step.
    """
    scheme = choice.time_frequency_scheme

    def planner(ctx, sats):
        d = requested_durations(sats, ctx.q, ctx.rates, ctx.spectrum, ctx.T)
        if scheme == "proposed":
            return service_time_allocation(serving_beam_allocation(ctx, sats, d, backend), ctx, on_step)
        plan = greedy_allocation(ctx, sats, d)
        if scheme == "swap":
            plan = swap_refinement(plan, ctx)
        return plan

    return planner


@dataclass
class RunRecord:
    scenario_hash: str
    seed: int
    label: str
    metrics: MetricsLog
    summary: dict
    stage_seconds: dict
    plans: list = field(default_factory=list)

    def to_summary_json(self) -> str:
        return json.dumps(self.summary, indent=2, sort_keys=True)


def _summary(world: World, log: MetricsLog, trackers: Trackers, q: np.ndarray, F: int, inr_stats: dict,
             seed: int, stage: dict, scn_hash: str, realloc_count: int) -> dict:
    rev = log.column("mean_revisit")
    queue = log.column("mean_queue")
    served = log.column("served_cells")
    d_tilde = trackers.d_sum / max(F, 1)
    return {
        "scenario": world.scenario.name,
        "scenario_hash": scn_hash,
        "seed": seed,
        "traffic_seed": world.traffic.rng_seed,
        "label": world.choice.label,
        "time_frequency_scheme": world.choice.time_frequency_scheme,
        "satellite_scheme": world.choice.satellite_scheme,
        "V": world.V,
        "d_max": world.d_max,
        "T": world.T,
        "epochs": F,
        "cells": world.n_cells,
        "satellites": world.n_sats,
        "rate_packets_per_slot": world.rate,
        "offered_load_packets_per_epoch": float(world.traffic.mean_rates.sum()),
        "h_min": world.budget.h_min,
        "s_max": world.budget.s_max,
        "gain_threshold_db": gain_threshold(world.budget),
        "mean_revisit": float(rev.mean()) if len(rev) else 0.0,
        "revisit_p50": float(np.percentile(rev, 50)) if len(rev) else 0.0,
        "revisit_p95": float(np.percentile(rev, 95)) if len(rev) else 0.0,
        "mean_queue": float(queue.mean()) if len(queue) else 0.0,
        "queue_p95": float(np.percentile(queue, 95)) if len(queue) else 0.0,
        "final_max_queue_per_epoch": float(q.max() / F) if len(q) else 0.0,
        "final_mean_queue": float(q.mean()) if len(q) else 0.0,
        "handovers": int(trackers.handovers_cum),
        "handover_rate": float(trackers.handovers_cum / F),
        "p0_final": p0_objective(d_tilde, trackers.delta_sum / max(F, 1)),
        "p0_mean": float(log.column("p0").mean()) if log.rows else 0.0,
        "mean_served_cells": float(served.mean()) if len(served) else 0.0,
        "dmax_violations": int(log.column("dmax_violations").sum()) if log.rows else 0,
        "satellite_reallocations": realloc_count,
        "inr": inr_stats,
        "stage_seconds": stage,
    }


def run_simulation(scn: Scenario, seed: int | None = None, out_dir=None, dump_plans: bool = False,
                   dump_tuples: bool = False, ephemeris: bool = False, check_inr: bool = True,
                   backend=None, epochs: int | None = None, progress=None, world: World | None = None,
                   on_epoch=None, on_step=None) -> RunRecord:
    """Run the scenario; when ``out_dir`` is given, outputs are written there as they appear."""
    world = build_world(scn, seed) if world is None else world
    seed = world.traffic.rng_seed
    F = scn.epochs if epochs is None else epochs
    C, S, T = world.n_cells, world.n_sats, world.T
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        save_traffic_map(out / "traffic_map.csv", world.traffic.mean_rates)
        if scn.text:
            (out / "scenario.toml").write_text(scn.text)
    log = MetricsLog(csv_path=out / "metrics.csv" if out else None,
                     jsonl_path=out / "metrics.jsonl" if out else None).open()
    plan_fh = open(out / "plans.jsonl", "w") if (out and dump_plans) else None
    tuple_fh = open(out / "tuples.csv", "w", newline="") if (out and dump_tuples) else None
    tuple_w = csv.writer(tuple_fh) if tuple_fh else None
    if tuple_w:
        tuple_w.writerow(["f", "c", "b", "c2", "b2"])
    eph_fh = open(out / "ephemeris.csv", "w", newline="") if (out and ephemeris) else None
    eph_w = csv.writer(eph_fh) if eph_fh else None
    if eph_w:
        eph_w.writerow(["epoch_index", "sat_id", "x_km", "y_km", "z_km"])

    trackers = Trackers(C, T, world.d_max)
    queues = QueueState.empty(C)
    arrivals = ArrivalStream(world.traffic)
    planner = make_planner(world.choice, backend, on_step)
    alloc = None
    stage = {k: 0.0 for k in STAGES}
    inr_stats = {"checked_cells": 0, "precondition_cells": 0, "violations": 0, "max_inr_db": None}
    max_inr = -math.inf
    plans = []
    realloc_count = 0
    cell_pos = world.grid.positions
    horizon = world.elements.period_s / 2.0
    try:
        for f in range(1, F + 1):
            t0 = time.perf_counter()
            geo = propagate(world.elements, f, world.constellation.epoch_duration_s, cell_pos,
                            world.min_elevation_deg)
            t1 = time.perf_counter()
            tuples = build_tuple_set(geo, world.spectrum, world.budget, world.antenna)
            t2 = time.perf_counter()
            vis = geo.visibility
            rates = np.where(vis.any(axis=1), world.rate, 0.0)
            ctx = EpochContext(f, T, world.V, world.d_max, vis, geo.elevation, world.spectrum, tuples,
                               trackers, queues.q.copy(), rates)
            lost = alloc is None or any(
                (alloc[c] >= 0 and not vis[c, alloc[c]]) or (alloc[c] < 0 and vis[c].any())
                for c in range(C))
            trigger = lost or f % world.realloc_period == 0
            if trigger:
                realloc_count += 1
                scheme = world.choice.satellite_scheme
                rem = None
                needs_rem = scheme in ("maxtime", "topsis") or world.sa_reassign == "visibility"
                if scheme != "minload" and needs_rem:
                    rem = remaining_visibility_s(world.elements, geo.time_s, cell_pos,
                                                 world.min_elevation_deg,
                                                 max(world.constellation.epoch_duration_s, 1.0), horizon)
                if scheme == "proposed_sa":
                    # cells that lost their satellite restart on the longest-lived one
                    res = serving_satellite_allocation(ctx, world.sa, alloc, backend, planner=planner,
                                                       priority=rem)
                    plan = res.plan
                    alloc = plan.sat.copy()
                else:
                    if scheme == "minload":
                        alloc = minload_satellites(vis, ctx.q)
                    else:
                        if scheme == "maxtime":
                            alloc = maxtime_satellites(vis, rem)
                        else:
                            alloc = topsis_satellites(vis, rem, geo.elevation, ctx.q)
                    plan = planner(ctx, alloc)
            else:
                plan = planner(ctx, alloc)
            t3 = time.perf_counter()
            bad = plan_feasibility_check(plan, vis, world.spectrum, tuples, T)
            if bad:
                raise PlanInfeasible(f"epoch {f}: " + "; ".join(str(v) for v in bad))
            gamma = ctx.gamma(plan)
            if check_inr:
                rep = realized_inr(plan, geo, world.spectrum, world.budget, world.antenna)
                ok = rep["preconditions"] & plan.served
                inr_stats["checked_cells"] += int(plan.served.sum())
                inr_stats["precondition_cells"] += int(ok.sum())
                finite = rep["inr"][ok]
                if len(finite):
                    max_inr = max(max_inr, float(finite.max()))
                inr_stats["violations"] += int(np.sum(finite > world.budget.inr_threshold))
            q_before = queues.q
            queues = update_queues(queues, plan.durations, rates, arrivals.draw(f))
            rec = trackers.commit(plan)
            row = {
                "f": f,
                "mean_revisit": float(rec["d"].mean()),
                "mean_queue": float(queues.q.mean()),
                "delta_f": int(rec["delta"]),
                "handovers_cum": int(trackers.handovers_cum),
                "gamma": float(gamma),
                "p0": p0_objective(rec["d_tilde"], rec["delta_tilde"]),
                "served_cells": int(plan.served.sum()),
                "dmax_violations": int(rec["dmax_violations"]),
            }
            log.append(row)
            if plan_fh:
                plan_fh.write(plan.to_json() + "\n")
            if dump_plans and out is None:
                plans.append(plan.copy())
            if tuple_w:
                tuples.write_rows(tuple_w)
            if eph_w:
                for s_id, p in enumerate(geo.sat_pos):
                    eph_w.writerow([f, s_id, repr(float(p[0])), repr(float(p[1])), repr(float(p[2]))])
            if on_epoch is not None:
                on_epoch(f, ctx, plan, q_before)
            t4 = time.perf_counter()
            stage["geometry"] += t1 - t0
            stage["tuple_set"] += t2 - t1
            stage["scheduling"] += t3 - t2
            stage["bookkeeping"] += t4 - t3
            if progress is not None:
                progress(f, F)
    finally:
        log.close()
        for fh in (plan_fh, tuple_fh, eph_fh):
            if fh is not None:
                fh.close()
    inr_stats["max_inr_db"] = max_inr if math.isfinite(max_inr) else None
    scn_hash = scn.digest()
    summary = _summary(world, log, trackers, queues.q, F, inr_stats, seed, stage, scn_hash, realloc_count)
    record = RunRecord(scn_hash, seed, world.choice.label, log, summary, stage, plans)
    if out is not None:
        (out / "summary.json").write_text(record.to_summary_json() + "\n")
    return record


COMPARE_METRICS = ("mean_revisit", "mean_queue", "handover_rate", "p0_final", "p0_mean",
                   "mean_served_cells", "dmax_violations", "final_max_queue_per_epoch")


def compare_runs(summaries: list, reference: int = 0) -> dict:
    """Per-metric values and relative deltas against the ``reference`` run."""
    if not summaries:
        return {"runs": [], "metrics": {}}
    seeds = {s.get("traffic_seed") for s in summaries}
    if len(seeds) > 1:
        warnings.warn("traffic seeds differ; comparison is not paired", stacklevel=2)
    ref = summaries[reference]
    table = {}
    for m in COMPARE_METRICS:
        vals = [float(s.get(m, float("nan"))) for s in summaries]
        base = float(ref.get(m, float("nan")))
        deltas = [v - base for v in vals]
        rel = [d / base if base not in (0.0,) and math.isfinite(base) else 0.0 if d == 0 else math.nan
               for d in deltas]
        table[m] = {"values": vals, "delta": deltas, "relative": rel}
    return {"runs": [s.get("label", "?") for s in summaries], "paired": len(seeds) <= 1, "metrics": table}


def load_summary(run_dir) -> dict:
    return json.loads((Path(run_dir) / "summary.json").read_text())
