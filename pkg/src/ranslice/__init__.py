"""Deterministic RAN slicing simulator: request generation, admission,
RB-grid enforcement, TTI scheduling and shared-RB coordination metrics."""

from .kernels import BACKEND
from .metrics import aggregate_runs, shared_rb_stats
from .middleware import SliceRequest, collect_requests, notify, snapshot_dvi, submit_request
from .mno_agent import (
    Directive,
    MnoProfile,
    MobileUser,
    ResourcePool,
    best_response,
    generate_request,
    run_best_response_dynamics,
    schedule_tti,
)
from .scm import (
    EnforcementStrategy,
    RBGrid,
    SlicePolicy,
    admission_control,
    allocate_slices,
    enforce_slicing,
    oracle_enforce,
)
from .topology import (
    BaseStation,
    InterferenceGraph,
    Topology,
    build_interference_graph,
    haversine_km,
    load_topology,
    synthetic_topology,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "aggregate_runs",
    "shared_rb_stats",
    "SliceRequest",
    "collect_requests",
    "notify",
    "snapshot_dvi",
    "submit_request",
    "Directive",
    "MnoProfile",
    "MobileUser",
    "ResourcePool",
    "best_response",
    "generate_request",
    "run_best_response_dynamics",
    "schedule_tti",
    "EnforcementStrategy",
    "RBGrid",
    "SlicePolicy",
    "admission_control",
    "allocate_slices",
    "enforce_slicing",
    "oracle_enforce",
    "BaseStation",
    "InterferenceGraph",
    "Topology",
    "build_interference_graph",
    "haversine_km",
    "load_topology",
    "synthetic_topology",
]
