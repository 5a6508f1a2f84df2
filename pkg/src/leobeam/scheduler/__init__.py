"""Beam, service-time and satellite allocation."""
from .beam_alloc import (ConflictGraph, build_conflict_graph, fallback_assign,
                         greedy_independent_set, serving_beam_allocation)
from .context import EpochContext, initial_allocation, requested_durations
from .plan import BeamPlan, Violation, plan_feasibility_check, windows_overlap
from .satellite_alloc import (SaConfig, SaResult, plan_for_allocation, random_neighbor,
                              serving_satellite_allocation)
from .service_time import service_time_allocation, tune_boundary, tune_pair

__all__ = [
    "BeamPlan", "ConflictGraph", "EpochContext", "SaConfig", "SaResult", "Violation",
    "build_conflict_graph", "fallback_assign", "greedy_independent_set", "initial_allocation",
    "plan_feasibility_check", "plan_for_allocation", "random_neighbor", "requested_durations",
    "serving_beam_allocation", "serving_satellite_allocation", "service_time_allocation",
    "tune_boundary", "tune_pair", "windows_overlap",
]
