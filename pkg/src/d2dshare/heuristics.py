"""Greedy allocators and the per-tenant (intra-tenant) baselines.

All methods return :class:`~d2dshare.ilp.Allocation` values that can be
checked with :func:`~d2dshare.ilp.verify`.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .ilp import (Allocation, AllocationProblem, Status, meets_rate, solve_exact,
                  solve_with_dropping)

POOL_EXHAUSTED = "pool-exhausted"
ALL_AT_LMAX = "all-at-lmax"
SINR_BLOCKED = "sinr-blocked"


@dataclass(frozen=True)
class TraceStep:
    round: int
    link: int
    rb: Optional[int]          # None when the link was skipped
    reason: str = "assigned"


@dataclass
class HeuristicTrace:
    steps: list[TraceStep] = field(default_factory=list)
    termination_reason: str = ""

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["round", "link", "rb", "reason"])
            for s in self.steps:
                w.writerow([s.round, s.link, "" if s.rb is None else s.rb, s.reason])
            w.writerow(["", "", "", f"terminated:{self.termination_reason}"])


def greedy_rounds(p: AllocationProblem, order: Optional[Sequence[int]] = None) -> tuple[Allocation, HeuristicTrace]:
    """Round-based greedy: in every round each link (in ``order``) takes the
    free, unmasked RB with its highest rate, one RB per link per round.

    Ties go to the lowest RB id. Stops when the pool is used up, every link
    holds ``l_max`` RBs, or a full round assigns nothing. The minimum rate is
    only checked at the end.
    """
    order = list(p.links) if order is None else list(order)
    row = {i: a for a, i in enumerate(p.links)}
    free = np.ones(len(p.rbs), dtype=bool)
    rb_ids = np.asarray(p.rbs)
    held: dict[int, list[int]] = {i: [] for i in p.links}
    blocked: set[int] = set()
    trace = HeuristicTrace()

    rnd = 0
    while order:
        rnd += 1
        progress = False
        for link in order:
            if not free.any():
                break
            if len(held[link]) >= p.l_max or link in blocked:
                continue
            rates = np.where(free, p.rate[row[link]], 0.0)
            if not rates.any():
                # the free pool only shrinks, so a blocked link stays blocked
                blocked.add(link)
                trace.steps.append(TraceStep(rnd, link, None, SINR_BLOCKED))
                continue
            top = rates.max()
            b = int(np.flatnonzero(rates == top)[np.argmin(rb_ids[rates == top])])
            free[b] = False
            held[link].append(b)
            trace.steps.append(TraceStep(rnd, link, int(rb_ids[b])))
            progress = True
        if not free.any():
            trace.termination_reason = POOL_EXHAUSTED
            break
        if all(len(held[i]) >= p.l_max for i in order):
            trace.termination_reason = ALL_AT_LMAX
            break
        if not progress:
            trace.termination_reason = SINR_BLOCKED
            break
    if not order:
        trace.termination_reason = ALL_AT_LMAX

    sets = {i: [p.rbs[b] for b in bs] for i, bs in held.items()}
    alloc = Allocation.from_sets(p, sets, Status.FEASIBLE)
    ok = all(alloc.assigned[i] and meets_rate(alloc.per_link_rate_bps[i], p.r_th) for i in p.links)
    alloc.status = Status.FEASIBLE if ok else Status.INFEASIBLE
    return alloc, trace


def alternating_order(links: Sequence[int], receiver: Sequence[int], num_tenants: int = 2) -> list[int]:
    """Visit order cycling through receiver tenants A, B, A, B, ...

    Each tenant's links are queued by link id; when the tenant due next has
    no links left, the next non-empty queue is used.
    """
    queues = {n: [i for i, t in sorted(zip(links, receiver)) if t == n] for n in range(num_tenants)}
    order = []
    turn = 0
    while len(order) < len(links):
        for step in range(num_tenants):
            n = (turn + step) % num_tenants
            if queues[n]:
                order.append(queues[n].pop(0))
                break
        turn += 1
    return order


def _tenant_array(p: AllocationProblem, given, attr: str) -> np.ndarray:
    if given is not None:
        if isinstance(given, Mapping):
            return np.array([given[i] for i in p.links], dtype=int)
        return np.asarray(given, dtype=int)
    value = getattr(p, attr)
    if value is None:
        raise ValueError(f"problem carries no {attr}; pass it explicitly")
    return value


def inter_tenant_heuristic(p: AllocationProblem, receiver_tenant=None) -> tuple[Allocation, HeuristicTrace]:
    """Greedy over the fused pool, alternating between links whose receiver
    belongs to tenant A and to tenant B.

    ``receiver_tenant`` maps link id to tenant (or lists one tenant per row);
    it defaults to the problem's own ``receiver_tenant`` and, failing that,
    to alternating tenants by row position.
    """
    if receiver_tenant is None and p.receiver_tenant is None:
        receiver = np.arange(len(p.links)) % 2
    else:
        receiver = _tenant_array(p, receiver_tenant, "receiver_tenant")
    n_tenants = max(2, int(receiver.max(initial=0)) + 1)
    return greedy_rounds(p, alternating_order(p.links, receiver, n_tenants))


def _per_tenant(p: AllocationProblem, initiator_tenant, solve: Callable) -> Allocation:
    initiator = _tenant_array(p, initiator_tenant, "initiator_tenant")
    if p.rb_tenant is None:
        raise ValueError("problem carries no rb_tenant; cannot split the pool")
    tenants = sorted(set(initiator.tolist()) | set(p.rb_tenant.tolist()))
    sets: dict[int, tuple[int, ...]] = {}
    dropped: list[int] = []
    tenant_status: dict[int, Status] = {}
    for n in tenants:
        links = [i for i, t in zip(p.links, initiator) if t == n]
        if not links:
            continue
        rbs = [k for k, t in zip(p.rbs, p.rb_tenant) if t == n]
        if not rbs:
            tenant_status[n] = Status.INFEASIBLE
            continue
        alloc = solve(p.restrict(links=links, rbs=rbs))
        tenant_status[n] = alloc.status
        sets.update({i: rbs_ for i, rbs_ in alloc.assigned.items() if i not in alloc.dropped})
        dropped.extend(alloc.dropped)
    good = all(s in (Status.OPTIMAL, Status.FEASIBLE) for s in tenant_status.values())
    if not good:
        status = Status.INFEASIBLE
    elif all(s == Status.OPTIMAL for s in tenant_status.values()):
        status = Status.OPTIMAL
    else:
        status = Status.FEASIBLE
    alloc = Allocation.from_sets(p.restrict(links=[i for i in p.links if i not in set(dropped)]),
                                 sets, status, dropped=sorted(dropped))
    alloc.tenant_status = tenant_status
    return alloc


def intra_tenant_optimal(p: AllocationProblem, initiator_tenant=None, drop_links: bool = False,
                         node_budget: Optional[int] = None) -> Allocation:
    """Each tenant optimally serves the links its subscribers initiate, using
    only its own RB pool; the per-tenant results are merged.

    With ``drop_links`` every tenant falls back to the drop-links
    relaxation when its sub-problem is infeasible.
    """
    if drop_links:
        return _per_tenant(p, initiator_tenant,
                           lambda sub: solve_with_dropping(
                               sub, lambda q: solve_exact(q, node_budget=node_budget))[0])
    return _per_tenant(p, initiator_tenant, lambda sub: solve_exact(sub, node_budget=node_budget)[0])


def intra_tenant_heuristic(p: AllocationProblem, initiator_tenant=None) -> Allocation:
    """Per-tenant greedy on the initiator's own pool, links served in id order."""
    return _per_tenant(p, initiator_tenant, lambda sub: greedy_rounds(sub)[0])
