"""Seeded Monte Carlo trials and parameter sweeps comparing the four allocators."""

from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from statistics import NormalDist
from typing import Iterable, Optional, Sequence

import numpy as np

from .channel import build_rate_table
from .heuristics import inter_tenant_heuristic, intra_tenant_heuristic, intra_tenant_optimal
from .ilp import (REL_TOL, Allocation, AllocationProblem, Status, build_problem, solve_exact,
                  solve_with_dropping, verify)
from .model import ScenarioConfig, generate_topology
from .scheduler import schedule_cues

METHODS = ("inter_optimal", "inter_heuristic", "intra_optimal", "intra_heuristic")

AXES = ("num_links", "utilization_B", "max_range_m")

Z95 = NormalDist().inv_cdf(0.975)


def links_config(**changes) -> ScenarioConfig:
    """Tenant A holds a double-sized pool; both pools fully occupied."""
    cfg = ScenarioConfig(num_cues=75, rb_pool_sizes=(50, 25), cue_split=(2 / 3, 1 / 3),
                         cue_utilization=(1.0, 1.0), num_d2d_links=20)
    return cfg.replace(**changes)


def utilization_config(**changes) -> ScenarioConfig:
    """Equal pools, 20 links; tenant B's occupancy is the swept quantity."""
    cfg = ScenarioConfig(num_cues=50, rb_pool_sizes=(25, 25), cue_split=(0.5, 0.5),
                         cue_utilization=(1.0, 1.0), num_d2d_links=20)
    return cfg.replace(**changes)


def range_config(**changes) -> ScenarioConfig:
    """Same layout as the links preset; the maximum link range is swept."""
    return links_config(**changes)


@dataclass
class MethodResult:
    objective_bps: float
    feasible: bool             # feasible before any relaxation
    relaxed: bool              # drop-links relaxation was used
    served_links: int
    dropped_links: int
    violations: int
    wall_time_s: float
    nodes: int = 0
    sinr_eff_db: list[float] = field(default_factory=list)   # one per served link
    sinr_rb_db: list[float] = field(default_factory=list)    # one per assigned RB


@dataclass
class TrialResult:
    trial_index: int
    seed: tuple[int, int]
    methods: dict[str, MethodResult]
    num_links: int
    mean_link_length_m: float
    occupied_rbs: int
    usable_pair_fraction: float

    def objective(self, method: str) -> float:
        return self.methods[method].objective_bps

    def all_feasible(self) -> bool:
        return all(m.feasible for m in self.methods.values())


def trial_rng(cfg: ScenarioConfig, trial_index: int) -> np.random.Generator:
    return np.random.default_rng([int(cfg.rng_seed), int(trial_index)])


def effective_sinr_db(rate_bps: float, n_rbs: int, bw_hz: float) -> float:
    """SINR giving ``rate_bps`` when spread evenly over ``n_rbs`` RBs."""
    return float(10.0 * np.log10(2.0 ** (rate_bps / (n_rbs * bw_hz)) - 1.0))


def _method_result(alloc: Allocation, p: AllocationProblem, ch, feasible: bool, relaxed: bool,
                   elapsed: float, nodes: int = 0) -> MethodResult:
    eff, per_rb = [], []
    for link, rbs in sorted(alloc.assigned.items()):
        if not rbs:
            continue
        eff.append(effective_sinr_db(alloc.per_link_rate_bps[link], len(rbs), ch.rb_bandwidth_hz))
        per_rb.extend(float(10 * np.log10(ch.sinr_table[link, k])) for k in rbs)
    return MethodResult(
        objective_bps=alloc.objective_bps,
        feasible=feasible,
        relaxed=relaxed,
        served_links=alloc.num_served,
        dropped_links=len(alloc.dropped),
        violations=len(verify(alloc, p)),
        wall_time_s=elapsed,
        nodes=nodes,
        sinr_eff_db=eff,
        sinr_rb_db=per_rb,
    )


def run_trial(cfg: ScenarioConfig, trial_index: int, drop_links: bool = True,
              node_budget: Optional[int] = None) -> TrialResult:
    """Draw one realization and run all four methods on it.

    Infeasible optimal problems are retried under the drop-links relaxation
    when ``drop_links`` is set; greedy methods keep their partial result.
    Unserved links contribute zero rate.
    """
    cfg.validate()
    rng = trial_rng(cfg, trial_index)
    topo = generate_topology(cfg, rng)
    sched = schedule_cues(topo, cfg, trial_index)
    ch = build_rate_table(topo, sched, cfg, rng)
    results: dict[str, MethodResult] = {}

    summary = dict(
        trial_index=trial_index,
        seed=(int(cfg.rng_seed), int(trial_index)),
        num_links=topo.num_links,
        mean_link_length_m=float(topo.link_lengths().mean()) if topo.num_links else 0.0,
        occupied_rbs=len(sched.rb_to_cue),
        usable_pair_fraction=float(ch.feasible.mean()) if ch.feasible.size else 0.0,
    )
    if topo.num_links == 0:
        empty = MethodResult(0.0, True, False, 0, 0, 0, 0.0)
        return TrialResult(methods={m: empty for m in METHODS}, **summary)

    p = build_problem(ch, "fused", l_max=cfg.l_max, r_th=cfg.r_th_bps,
                      initiator_tenant=topo.initiator_tenant, receiver_tenant=topo.receiver_tenant)

    def exact(q):
        return solve_exact(q, node_budget=node_budget)

    t0 = time.perf_counter()
    alloc, stats = exact(p)
    feasible = alloc.status == Status.OPTIMAL
    nodes = stats.nodes_explored
    if not feasible and drop_links and alloc.status == Status.INFEASIBLE:
        alloc, stats = solve_with_dropping(p, exact)
        nodes += stats.nodes_explored
    results["inter_optimal"] = _method_result(alloc, p, ch, feasible, not feasible and drop_links,
                                              time.perf_counter() - t0, nodes)

    t0 = time.perf_counter()
    alloc, _ = inter_tenant_heuristic(p)
    results["inter_heuristic"] = _method_result(alloc, p, ch, alloc.status == Status.FEASIBLE, False,
                                                time.perf_counter() - t0)

    t0 = time.perf_counter()
    alloc = intra_tenant_optimal(p, node_budget=node_budget)
    feasible = alloc.status == Status.OPTIMAL
    if not feasible and drop_links:
        alloc = intra_tenant_optimal(p, drop_links=True, node_budget=node_budget)
    results["intra_optimal"] = _method_result(alloc, p, ch, feasible, not feasible and drop_links,
                                              time.perf_counter() - t0)

    t0 = time.perf_counter()
    alloc = intra_tenant_heuristic(p)
    results["intra_heuristic"] = _method_result(alloc, p, ch, alloc.status == Status.FEASIBLE, False,
                                                time.perf_counter() - t0)
    return TrialResult(methods=results, **summary)


def dominance_violations(trial: TrialResult) -> list[str]:
    """Broken per-trial orderings; only meaningful when every method is feasible."""
    obj = {m: trial.objective(m) for m in METHODS}
    out = []
    for hi, lo in (("inter_optimal", "inter_heuristic"), ("inter_optimal", "intra_optimal"),
                   ("intra_optimal", "intra_heuristic")):
        if obj[hi] < obj[lo] - REL_TOL * max(1.0, abs(obj[lo])):
            out.append(f"{hi} {obj[hi]!r} < {lo} {obj[lo]!r}")
    return out


# ----------------------------------------------------------------------------
# Aggregation

@dataclass
class MethodSummary:
    n: int
    mean_bps: float
    ci_low_bps: float
    ci_high_bps: float
    feasible_fraction: float
    relaxed_fraction: float
    mean_runtime_s: float


def mean_ci(values: Sequence[float]) -> tuple[float, float, float]:
    """Mean and normal-approximation 95% interval."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("no values to aggregate")
    mean = float(arr.mean())
    if arr.size < 2:
        return mean, mean, mean
    half = Z95 * float(arr.std(ddof=1)) / float(np.sqrt(arr.size))
    return mean, mean - half, mean + half


def summarize(trials: Sequence[TrialResult], method: str) -> MethodSummary:
    rs = [t.methods[method] for t in trials]
    mean, lo, hi = mean_ci([r.objective_bps for r in rs])
    return MethodSummary(
        n=len(rs), mean_bps=mean, ci_low_bps=lo, ci_high_bps=hi,
        feasible_fraction=float(np.mean([r.feasible for r in rs])),
        relaxed_fraction=float(np.mean([r.relaxed for r in rs])),
        mean_runtime_s=float(np.mean([r.wall_time_s for r in rs])),
    )


@dataclass
class SweepPoint:
    value: float
    trials: list[TrialResult]
    summary: dict[str, MethodSummary]

    def mean(self, method: str) -> float:
        return self.summary[method].mean_bps

    def sinr_samples(self, method: str, per_rb: bool = False) -> list[float]:
        attr = "sinr_rb_db" if per_rb else "sinr_eff_db"
        return [x for t in self.trials for x in getattr(t.methods[method], attr)]


@dataclass
class SweepResult:
    axis: str
    config: ScenarioConfig
    points: list[SweepPoint]

    @property
    def values(self) -> list[float]:
        return [pt.value for pt in self.points]

    def means(self, method: str) -> list[float]:
        return [pt.mean(method) for pt in self.points]

    def point(self, value) -> SweepPoint:
        for pt in self.points:
            if pt.value == value:
                return pt
        raise KeyError(value)


def config_for(cfg: ScenarioConfig, axis: str, value) -> ScenarioConfig:
    if axis == "num_links":
        return cfg.replace(num_d2d_links=int(value))
    if axis == "utilization_B":
        return cfg.replace(cue_utilization=(*cfg.cue_utilization[:1], float(value),
                                            *cfg.cue_utilization[2:]))
    if axis == "max_range_m":
        return cfg.replace(max_d2d_range_m=float(value))
    raise ValueError(f"unknown sweep axis {axis!r}")


def run_trials(cfg: ScenarioConfig, trials: int, workers: int = 1, **kwargs) -> list[TrialResult]:
    """Trials 0..trials-1, returned in index order regardless of ``workers``."""
    fn = partial(run_trial, cfg, **kwargs)
    if workers <= 1:
        return [fn(t) for t in range(trials)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(trials), chunksize=max(1, trials // (4 * workers))))


def sweep(cfg: ScenarioConfig, axis: str, values: Iterable, trials: int, workers: int = 1,
          **kwargs) -> SweepResult:
    points = []
    for value in values:
        results = run_trials(config_for(cfg, axis, value), trials, workers, **kwargs)
        points.append(SweepPoint(value=value, trials=results,
                                 summary={m: summarize(results, m) for m in METHODS}))
    return SweepResult(axis=axis, config=cfg, points=points)


def sweep_links(cfg: ScenarioConfig, values=(10, 16, 20, 30, 40), trials: int = 1000, **kwargs) -> SweepResult:
    return sweep(cfg, "num_links", values, trials, **kwargs)


def sweep_utilization(cfg: ScenarioConfig, values=(0.2, 0.4, 0.6, 0.8, 1.0), trials: int = 1000,
                      **kwargs) -> SweepResult:
    return sweep(cfg, "utilization_B", values, trials, **kwargs)


def sweep_range(cfg: ScenarioConfig, values=(25, 50, 75, 100, 125, 150), trials: int = 1000,
                **kwargs) -> SweepResult:
    return sweep(cfg, "max_range_m", values, trials, **kwargs)


# ----------------------------------------------------------------------------
# Empirical CDF

@dataclass(frozen=True)
class CdfTable:
    values: np.ndarray       # sorted samples
    percentiles: np.ndarray  # matching percentile positions, 0..100

    def percentile(self, q: float) -> float:
        return float(np.interp(q, self.percentiles, self.values))

    def rows(self) -> list[tuple[float, float]]:
        return list(zip(self.values.tolist(), self.percentiles.tolist()))


def sinr_cdf(samples: Sequence[float]) -> CdfTable:
    arr = np.sort(np.asarray(samples, dtype=float))
    if arr.size == 0:
        raise ValueError("empty sample set")
    if arr.size == 1:
        return CdfTable(arr, np.array([50.0]))
    pct = 100.0 * np.arange(arr.size) / (arr.size - 1)
    return CdfTable(arr, pct)


# ----------------------------------------------------------------------------
# CSV output; floats use repr so that re-runs are byte-identical

TRIAL_COLUMNS = ["axis", "value", "trial", "method", "objective_bps", "feasible", "relaxed",
                 "served_links", "dropped_links", "violations", "nodes"]
SWEEP_COLUMNS = ["axis", "value", "method", "n", "mean_bps", "ci_low_bps", "ci_high_bps",
                 "feasible_fraction", "relaxed_fraction"]
SINR_COLUMNS = ["axis", "value", "trial", "method", "kind", "sinr_db"]


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, np.integer):
        return str(int(x))
    return str(x)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def trial_log_csv(result: SweepResult) -> str:
    rows = []
    for pt in result.points:
        for t in pt.trials:
            for m in METHODS:
                r = t.methods[m]
                rows.append([result.axis, pt.value, t.trial_index, m, r.objective_bps, r.feasible,
                             r.relaxed, r.served_links, r.dropped_links, r.violations, r.nodes])
    return _csv(TRIAL_COLUMNS, rows)


def sweep_csv(result: SweepResult) -> str:
    rows = []
    for pt in result.points:
        for m in METHODS:
            s = pt.summary[m]
            rows.append([result.axis, pt.value, m, s.n, s.mean_bps, s.ci_low_bps, s.ci_high_bps,
                         s.feasible_fraction, s.relaxed_fraction])
    return _csv(SWEEP_COLUMNS, rows)


def sinr_csv(result: SweepResult) -> str:
    rows = []
    for pt in result.points:
        for t in pt.trials:
            for m in METHODS:
                r = t.methods[m]
                rows.extend([result.axis, pt.value, t.trial_index, m, "effective", x] for x in r.sinr_eff_db)
                rows.extend([result.axis, pt.value, t.trial_index, m, "per_rb", x] for x in r.sinr_rb_db)
    return _csv(SINR_COLUMNS, rows)


def runtime_table(result: SweepResult) -> dict:
    return {str(pt.value): {m: pt.summary[m].mean_runtime_s for m in METHODS} for pt in result.points}
