"""Inter-tenant D2D resource sharing: topology and channel simulation,
exact and greedy RB allocation, and Monte Carlo experiment sweeps."""

__version__ = "0.1.0"

from .model import InvalidConfigError, ScenarioConfig, Topology, generate_topology, point_in_hexagon
from .scheduler import CueSchedule, schedule_cues
from .channel import ChannelRealization, build_rate_table
from .ilp import (Allocation, AllocationProblem, SolveStats, Status, build_problem, solve_exact,
                  solve_oracle, solve_with_dropping, verify)
from .heuristics import inter_tenant_heuristic, intra_tenant_heuristic, intra_tenant_optimal
from .experiment import run_trial, sweep_links, sweep_range, sweep_utilization, sinr_cdf

__all__ = [
    "Allocation", "AllocationProblem", "ChannelRealization", "CueSchedule", "InvalidConfigError",
    "ScenarioConfig", "SolveStats", "Status", "Topology", "build_problem", "build_rate_table",
    "generate_topology", "inter_tenant_heuristic", "intra_tenant_heuristic", "intra_tenant_optimal",
    "point_in_hexagon", "run_trial", "schedule_cues", "sinr_cdf", "solve_exact", "solve_oracle",
    "solve_with_dropping", "sweep_links", "sweep_range", "sweep_utilization", "verify",
]
