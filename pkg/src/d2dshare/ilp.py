"""Sum-rate maximizing RB assignment: problem model, exact solver, oracle, checks.

An instance assigns to every D2D link between 1 and ``l_max`` RBs, no RB to
more than one link, such that each link reaches ``r_th`` bit/s and never
uses an RB whose rate entry is 0 (SINR or CUE-protection infeasible).

The exact solver is a depth-first branch and bound. Its bound drops only the
minimum-rate constraint: what remains is a capacitated bipartite matching
with a lower bound of one RB per link, solved exactly by reduction to a
rectangular assignment problem. Whenever that bound's solution meets every
link's minimum rate it is optimal for the subtree; otherwise the solver
branches on the RB set of one violating link.
"""

from __future__ import annotations

import heapq
import io
import itertools
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence, Union

import numpy as np
from scipy.optimize import linear_sum_assignment

ORACLE_MAX_LINKS = 5
ORACLE_MAX_RBS = 10

REL_TOL = 1e-9


class Status(str, Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    BUDGET_EXCEEDED = "budget_exceeded"


class InfeasibleProblemError(ValueError):
    """Raised when a problem cannot even be formed (e.g. no RBs in scope)."""


class OracleGuardError(ValueError):
    """Raised when an instance is too large for exhaustive enumeration."""


def meets_rate(value: float, r_th: float) -> bool:
    return value >= r_th - REL_TOL * max(1.0, abs(r_th))


@dataclass(frozen=True)
class AllocationProblem:
    """Rate matrix over the links and RBs in scope.

    ``rate[a, b]`` is the rate of ``links[a]`` on ``rbs[b]``; 0 marks a
    forbidden pair. The optional tenant arrays describe the fused-pool view
    (owner of each RB column, initiator/receiver tenant of each link row)
    and are only needed by the intra-tenant and alternating methods.
    """

    links: tuple[int, ...]
    rbs: tuple[int, ...]
    rate: np.ndarray
    l_max: int
    r_th: float = 0.0
    rb_tenant: Optional[np.ndarray] = None
    initiator_tenant: Optional[np.ndarray] = None
    receiver_tenant: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "links", tuple(int(i) for i in self.links))
        object.__setattr__(self, "rbs", tuple(int(k) for k in self.rbs))
        rate = np.asarray(self.rate, dtype=float).reshape(len(self.links), len(self.rbs))
        if np.any(rate < 0) or not np.all(np.isfinite(rate)):
            raise ValueError("rates must be finite and non-negative")
        object.__setattr__(self, "rate", rate)
        if self.l_max < 1:
            raise ValueError("l_max must be at least 1")
        for name, size in (("rb_tenant", len(self.rbs)),
                           ("initiator_tenant", len(self.links)),
                           ("receiver_tenant", len(self.links))):
            value = getattr(self, name)
            if value is not None:
                value = np.asarray(value, dtype=int)
                if value.shape != (size,):
                    raise ValueError(f"{name} must have length {size}")
                object.__setattr__(self, name, value)

    @property
    def shape(self) -> tuple[int, int]:
        return self.rate.shape

    def rate_of(self, link: int, rb: int) -> float:
        return float(self.rate[self.links.index(link), self.rbs.index(rb)])

    def restrict(self, links: Optional[Iterable[int]] = None,
                 rbs: Optional[Iterable[int]] = None) -> "AllocationProblem":
        """Sub-problem over a subset of links and/or RBs (original order kept)."""
        keep_l = set(self.links if links is None else links)
        keep_k = set(self.rbs if rbs is None else rbs)
        rows = [a for a, i in enumerate(self.links) if i in keep_l]
        cols = [b for b, k in enumerate(self.rbs) if k in keep_k]

        def pick(arr, idx):
            return None if arr is None else arr[idx]

        return AllocationProblem(
            links=tuple(self.links[a] for a in rows),
            rbs=tuple(self.rbs[b] for b in cols),
            rate=self.rate[np.ix_(rows, cols)],
            l_max=self.l_max,
            r_th=self.r_th,
            rb_tenant=pick(self.rb_tenant, cols),
            initiator_tenant=pick(self.initiator_tenant, rows),
            receiver_tenant=pick(self.receiver_tenant, rows),
        )


@dataclass
class Allocation:
    """RB sets per link; links listed in ``dropped`` were removed by the
    drop-links relaxation and carry no rate."""

    assigned: dict[int, tuple[int, ...]]
    per_link_rate_bps: dict[int, float]
    objective_bps: float
    status: Status
    dropped: tuple[int, ...] = ()
    tenant_status: dict[int, Status] = field(default_factory=dict)

    @classmethod
    def from_sets(cls, p: AllocationProblem, sets: dict[int, Iterable[int]],
                  status: Status, dropped: Sequence[int] = ()) -> "Allocation":
        col = {k: b for b, k in enumerate(p.rbs)}
        assigned, rates = {}, {}
        for a, link in enumerate(p.links):
            rbs = tuple(sorted(sets.get(link, ())))
            assigned[link] = rbs
            rates[link] = float(sum(p.rate[a, col[k]] for k in rbs))
        for link in dropped:
            assigned.setdefault(link, ())
            rates.setdefault(link, 0.0)
        return cls(assigned, rates, float(sum(rates.values())), status, tuple(dropped))

    @property
    def num_served(self) -> int:
        return sum(1 for rbs in self.assigned.values() if rbs)

    @property
    def is_feasible(self) -> bool:
        return self.status in (Status.OPTIMAL, Status.FEASIBLE) and not self.dropped


@dataclass
class SolveStats:
    nodes_explored: int = 0
    wall_time_s: float = 0.0
    bound_gap: float = 0.0
    relaxations: int = 0


def build_problem(ch, scope: Union[str, int] = "fused", links: Optional[Iterable[int]] = None,
                  *, l_max: int, r_th: float = 0.0, initiator_tenant=None,
                  receiver_tenant=None) -> AllocationProblem:
    """Slice a channel realization into an allocation problem.

    ``scope`` is ``"fused"`` for the union of all tenants' pools or a tenant
    id for that tenant's pool alone. ``links`` defaults to every link.
    """
    all_links = list(range(ch.num_links)) if links is None else sorted(int(i) for i in links)
    if not all_links:
        raise ValueError("problem needs at least one link")
    if scope == "fused":
        cols = list(range(ch.num_rbs))
    else:
        cols = [k for k in range(ch.num_rbs) if ch.rb_tenant[k] == int(scope)]
    if not cols:
        raise InfeasibleProblemError(f"no RBs in scope {scope!r}")

    def per_link(arr):
        return None if arr is None else np.asarray(arr, dtype=int)[all_links]

    return AllocationProblem(
        links=tuple(all_links),
        rbs=tuple(cols),
        rate=ch.rate_table[np.ix_(all_links, cols)],
        l_max=l_max,
        r_th=r_th,
        rb_tenant=np.asarray(ch.rb_tenant)[cols],
        initiator_tenant=per_link(initiator_tenant),
        receiver_tenant=per_link(receiver_tenant),
    )


# ----------------------------------------------------------------------------
# Exact branch and bound

def _min_counts(rate: np.ndarray, rows: Sequence[int], cols: np.ndarray, l_max: int,
                r_th: float) -> Optional[np.ndarray]:
    """Fewest RBs each row needs to reach ``r_th`` from ``cols`` (at least 1),
    or None when some row cannot reach it with ``l_max`` RBs."""
    if not rows:
        return np.zeros(0, dtype=int)
    top = np.sort(rate[np.ix_(list(rows), cols)], axis=1)[:, ::-1][:, :l_max]
    if top.shape[1] == 0:
        return None
    reach = np.cumsum(top, axis=1)
    ok = reach >= r_th - REL_TOL * max(1.0, abs(r_th))
    if not ok[:, -1].all():
        return None
    return np.maximum(ok.argmax(axis=1) + 1, 1)


def _matching_bound(rate: np.ndarray, rows: Sequence[int], cols: np.ndarray, l_max: int,
                    min_count: Optional[np.ndarray] = None):
    """Max-rate assignment of ``cols`` to ``rows`` ignoring minimum rates.

    Every row must receive at least ``min_count`` (default one) and at most
    ``l_max`` columns with a positive rate. Returns ``(value, {row: col
    tuple})`` or None when no such assignment exists.
    """
    if not rows:
        return 0.0, {}
    cols = np.asarray(cols, dtype=int)
    lo = np.ones(len(rows), dtype=int) if min_count is None else np.asarray(min_count, dtype=int)
    if lo.sum() > len(cols):
        return None
    sub = rate[np.ix_(list(rows), cols)]
    usable = sub > 0
    n_ok = usable.sum(axis=1)
    if np.any(n_ok < lo):
        return None

    # lo[row] mandatory copies per row plus optional copies up to its capacity
    copies = np.minimum(n_ok, l_max)
    owner = np.repeat(np.arange(len(rows)), copies)
    starts = np.concatenate(([0], np.cumsum(copies)[:-1]))
    mandatory = (np.arange(len(owner)) - starts[owner]) < lo[owner]
    n_opt = int((~mandatory).sum())

    top = np.sort(sub, axis=1)[:, ::-1][:, :l_max].sum()
    bonus = 1.0 + top
    forbid = -(int(lo.sum()) + 2) * bonus

    weights = np.full((len(owner), len(cols) + n_opt), forbid)
    real = np.where(usable[owner], sub[owner], forbid)
    real[mandatory] = np.where(usable[owner[mandatory]], real[mandatory] + bonus, forbid)
    weights[:, :len(cols)] = real
    weights[~mandatory, len(cols):] = 0.0

    r_idx, c_idx = linear_sum_assignment(weights, maximize=True)
    picked = {}
    value = 0.0
    for r, c in zip(r_idx, c_idx):
        if weights[r, c] == forbid:
            return None
        if c < len(cols):
            row = owner[r]
            picked.setdefault(row, []).append(int(cols[c]))
            value += sub[row, c]
    if len(picked) < len(rows):
        return None
    return value, {rows[row]: tuple(sorted(v)) for row, v in picked.items()}


def _subsets_by_sum(values: np.ndarray, cols: np.ndarray, l_max: int, r_th: float) -> Iterator[tuple[float, tuple[int, ...]]]:
    """Yield column subsets of size 1..l_max in non-increasing order of
    total value, stopping once totals drop below ``r_th``."""
    order = np.argsort(-values, kind="stable")
    v = values[order]
    c = cols[order]
    n = len(v)
    heap = []
    seen = set()
    for m in range(1, min(l_max, n) + 1):
        idx = tuple(range(m))
        heapq.heappush(heap, (-float(v[list(idx)].sum()), m, idx))
        seen.add(idx)
    while heap:
        neg, m, idx = heapq.heappop(heap)
        total = -neg
        if not meets_rate(total, r_th):
            return
        yield total, tuple(int(c[j]) for j in idx)
        for j in range(m):
            nxt = idx[j] + 1
            if nxt < n and (j == m - 1 or nxt < idx[j + 1]):
                child = idx[:j] + (nxt,) + idx[j + 1:]
                if child not in seen:
                    seen.add(child)
                    heapq.heappush(heap, (-float(v[list(child)].sum()), m, child))


class _BudgetExceeded(Exception):
    pass


def solve_exact(p: AllocationProblem, node_budget: Optional[int] = None,
                warm_start: bool = True) -> tuple[Allocation, SolveStats]:
    """Optimal allocation for ``p`` or an infeasible status.

    With ``node_budget`` set, exceeding it stops the search and returns the
    best incumbent with status ``BUDGET_EXCEEDED``.
    """
    t0 = time.perf_counter()
    stats = SolveStats()
    n_rows, n_cols = p.shape
    if n_rows == 0:
        stats.wall_time_s = time.perf_counter() - t0
        return Allocation.from_sets(p, {}, Status.OPTIMAL), stats

    rate = p.rate
    l_max, r_th = p.l_max, p.r_th
    eps = REL_TOL

    best_value = -np.inf
    best_sets: Optional[dict[int, tuple[int, ...]]] = None
    if warm_start:
        from .heuristics import greedy_rounds
        greedy, _ = greedy_rounds(p)
        if greedy.status == Status.FEASIBLE:
            best_value = greedy.objective_bps
            col = {k: b for b, k in enumerate(p.rbs)}
            row = {i: a for a, i in enumerate(p.links)}
            best_sets = {row[i]: tuple(col[k] for k in rbs) for i, rbs in greedy.assigned.items()}

    # branching preference: strongest links first
    priority = sorted(range(n_rows), key=lambda a: (-rate[a].max(initial=0.0), a))

    def better(bound: float) -> bool:
        if best_sets is None:
            return True
        return bound > best_value + eps * max(1.0, abs(best_value))

    def node(fixed_value: float, fixed: dict, free: list, avail: np.ndarray):
        nonlocal best_value, best_sets
        stats.nodes_explored += 1
        if node_budget is not None and stats.nodes_explored > node_budget:
            raise _BudgetExceeded
        avail_cols = np.flatnonzero(avail)
        lo = None
        if r_th > 0:
            lo = _min_counts(rate, free, avail_cols, l_max, r_th)
            if lo is None:
                return
        stats.relaxations += 1
        relax = _matching_bound(rate, free, avail_cols, l_max, lo)
        if relax is None:
            return
        value, sets = relax
        if not better(fixed_value + value):
            return
        short = [a for a in priority if a in sets and not meets_rate(rate[a, list(sets[a])].sum(), r_th)]
        if not short:
            best_value = fixed_value + value
            best_sets = {**fixed, **sets}
            return
        branch = short[0]
        others = [a for a in free if a != branch]
        stats.relaxations += 1
        rest = _matching_bound(rate, others, avail_cols, l_max,
                               None if lo is None else lo[[free.index(a) for a in others]])
        if rest is None:
            return
        usable = avail_cols[rate[branch, avail_cols] > 0]
        for total, subset in _subsets_by_sum(rate[branch, usable], usable, l_max, r_th):
            if not better(fixed_value + total + rest[0]):
                break
            child_avail = avail.copy()
            child_avail[list(subset)] = False
            node(fixed_value + total, {**fixed, branch: subset}, others, child_avail)

    status = Status.OPTIMAL
    root_bound = None
    try:
        relax = _matching_bound(rate, list(range(n_rows)), np.arange(n_cols), l_max)
        root_bound = None if relax is None else relax[0]
        node(0.0, {}, list(range(n_rows)), np.ones(n_cols, dtype=bool))
    except _BudgetExceeded:
        status = Status.BUDGET_EXCEEDED

    stats.wall_time_s = time.perf_counter() - t0
    if best_sets is None:
        if status == Status.OPTIMAL:
            status = Status.INFEASIBLE
        return Allocation.from_sets(p, {}, status), stats
    sets = {p.links[a]: tuple(p.rbs[b] for b in cols) for a, cols in best_sets.items()}
    alloc = Allocation.from_sets(p, sets, status)
    if status == Status.BUDGET_EXCEEDED and root_bound is not None and alloc.objective_bps > 0:
        stats.bound_gap = max(0.0, (root_bound - alloc.objective_bps) / alloc.objective_bps)
    return alloc, stats


def solve_with_dropping(p: AllocationProblem, solver=None) -> tuple[Allocation, SolveStats]:
    """Solve ``p``; while infeasible, drop the link whose best single-RB rate
    is lowest (ties: highest link id) and re-solve.

    The returned allocation lists removed links in ``dropped``; its status
    reflects the final, reduced problem.
    """
    solver = solver or solve_exact
    dropped: list[int] = []
    current = p
    total = SolveStats()
    while True:
        alloc, stats = solver(current)
        total.nodes_explored += stats.nodes_explored
        total.relaxations += stats.relaxations
        total.wall_time_s += stats.wall_time_s
        total.bound_gap = stats.bound_gap
        if alloc.status != Status.INFEASIBLE or not current.links:
            break
        best = current.rate.max(axis=1, initial=0.0)
        worst = min(range(len(current.links)), key=lambda a: (best[a], -current.links[a]))
        dropped.append(current.links[worst])
        current = current.restrict(links=[i for i in current.links if i != current.links[worst]])
    if dropped:
        alloc = Allocation.from_sets(current, alloc.assigned, alloc.status, dropped=dropped)
    return alloc, total


# ----------------------------------------------------------------------------
# Exhaustive oracle

def solve_oracle(p: AllocationProblem) -> Allocation:
    """Optimum by exhaustive enumeration of every disjoint assignment.

    Each link's admissible RB sets are listed explicitly; the enumeration
    over links shares suffix results keyed by the set of RBs still free.
    Only for instances with at most 5 links and 10 RBs.
    """
    n_rows, n_cols = p.shape
    if n_rows > ORACLE_MAX_LINKS or n_cols > ORACLE_MAX_RBS:
        raise OracleGuardError(
            f"oracle limited to {ORACLE_MAX_LINKS} links x {ORACLE_MAX_RBS} RBs, got {n_rows} x {n_cols}")
    if n_rows == 0:
        return Allocation.from_sets(p, {}, Status.OPTIMAL)

    full = (1 << n_cols) - 1
    masks = np.arange(full + 1)
    options = []
    for a in range(n_rows):
        opts = []
        usable = [b for b in range(n_cols) if p.rate[a, b] > 0]
        for m in range(1, min(p.l_max, len(usable)) + 1):
            for combo in itertools.combinations(usable, m):
                value = sum(float(p.rate[a, b]) for b in combo)
                if meets_rate(value, p.r_th):
                    opts.append((sum(1 << b for b in combo), value, combo))
        options.append(opts)

    # best[a][mask]: best total for links a.. using only RBs in mask
    best = [None] * (n_rows + 1)
    best[n_rows] = np.zeros(full + 1)
    for a in range(n_rows - 1, -1, -1):
        cur = np.full(full + 1, -np.inf)
        for bits, value, _ in options[a]:
            fits = (masks & bits) == bits
            cand = np.where(fits, value + best[a + 1][masks & ~bits], -np.inf)
            np.maximum(cur, cand, out=cur)
        best[a] = cur

    if not np.isfinite(best[0][full]):
        return Allocation.from_sets(p, {}, Status.INFEASIBLE)
    sets = {}
    mask = full
    for a in range(n_rows):
        target = best[a][mask]
        for bits, value, combo in options[a]:
            if (mask & bits) == bits and value + best[a + 1][mask & ~bits] == target:
                sets[p.links[a]] = tuple(p.rbs[b] for b in combo)
                mask &= ~bits
                break
    return Allocation.from_sets(p, sets, Status.OPTIMAL)


# ----------------------------------------------------------------------------
# Verification

@dataclass(frozen=True)
class Violation:
    constraint: str          # "7b" | "7c" | "7d" | "7e" | "mask" | "scope" | "objective"
    detail: str
    link: Optional[int] = None
    rb: Optional[int] = None

    def __str__(self):
        return f"[{self.constraint}] {self.detail}"


def verify(a: Allocation, p: AllocationProblem) -> list[Violation]:
    """List every way ``a`` breaks the constraints of ``p``.

    Links in ``a.dropped`` are exempt from the minimum-RB and minimum-rate
    checks but must not hold RBs.
    """
    out: list[Violation] = []
    row = {i: r for r, i in enumerate(p.links)}
    col = {k: b for b, k in enumerate(p.rbs)}
    owner: dict[int, int] = {}
    dropped = set(a.dropped)

    for link, rbs in sorted(a.assigned.items()):
        if link not in row:
            if rbs:
                out.append(Violation("scope", f"link {link} is not part of the problem", link=link))
            continue
        if link in dropped and rbs:
            out.append(Violation("scope", f"dropped link {link} holds RBs {rbs}", link=link))
        if len(set(rbs)) != len(rbs):
            out.append(Violation("7e", f"link {link} lists an RB twice", link=link))
        for k in rbs:
            if k not in col:
                out.append(Violation("scope", f"RB {k} is outside the problem's pool", link=link, rb=k))
                continue
            if k in owner and owner[k] != link:
                out.append(Violation("7e", f"RB {k} shared by links {owner[k]} and {link}", link=link, rb=k))
            owner.setdefault(k, link)
            if p.rate[row[link], col[k]] <= 0:
                out.append(Violation("mask", f"link {link} uses forbidden RB {k}", link=link, rb=k))
        if len(rbs) > p.l_max:
            out.append(Violation("7d", f"link {link} holds {len(rbs)} > {p.l_max} RBs", link=link))

    total = 0.0
    for link in p.links:
        if link in dropped:
            continue
        rbs = [k for k in a.assigned.get(link, ()) if k in col]
        if not rbs:
            out.append(Violation("7c", f"link {link} has no RB", link=link))
        value = float(sum(p.rate[row[link], col[k]] for k in rbs))
        total += value
        if not meets_rate(value, p.r_th):
            out.append(Violation("7b", f"link {link} rate {value:.6g} < {p.r_th:.6g}", link=link))
        reported = a.per_link_rate_bps.get(link, 0.0)
        if abs(reported - value) > REL_TOL * max(1.0, abs(value)):
            out.append(Violation("objective", f"link {link} reports {reported!r}, recomputed {value!r}", link=link))
    if abs(a.objective_bps - total) > REL_TOL * max(1.0, abs(total)):
        out.append(Violation("objective", f"objective {a.objective_bps!r} != recomputed {total!r}"))
    return out


# ----------------------------------------------------------------------------
# Plain-text instance format
#
#   # comment lines allowed anywhere
#   I K l_max r_th
#   <I rows of K rates, bit/s>
#   rb_tenant <K ints>            (optional)
#   initiator_tenant <I ints>     (optional)
#   receiver_tenant <I ints>      (optional)

_OPTIONAL_ROWS = ("rb_tenant", "initiator_tenant", "receiver_tenant")


class ProblemFormatError(ValueError):
    pass


def format_problem(p: AllocationProblem) -> str:
    buf = io.StringIO()
    n, m = p.shape
    buf.write(f"{n} {m} {p.l_max} {p.r_th!r}\n")
    for row in p.rate:
        buf.write(" ".join(repr(float(v)) for v in row) + "\n")
    for name in _OPTIONAL_ROWS:
        value = getattr(p, name)
        if value is not None:
            buf.write(name + " " + " ".join(str(int(v)) for v in value) + "\n")
    return buf.getvalue()


def parse_problem(text: str) -> AllocationProblem:
    lines = [(no, ln.split("#", 1)[0].split()) for no, ln in enumerate(text.splitlines(), 1)]
    lines = [(no, toks) for no, toks in lines if toks]
    if not lines:
        raise ProblemFormatError("empty instance file")
    no, head = lines[0]
    try:
        n, m, l_max = (int(t) for t in head[:3])
        r_th = float(head[3])
        if len(head) != 4:
            raise ValueError
    except (ValueError, IndexError):
        raise ProblemFormatError(f"line {no}: expected header 'I K l_max r_th'") from None
    if len(lines) < 1 + n:
        raise ProblemFormatError(f"expected {n} rate rows, found {len(lines) - 1}")
    rows = []
    for no, toks in lines[1:1 + n]:
        try:
            values = [float(t) for t in toks]
        except ValueError:
            raise ProblemFormatError(f"line {no}: non-numeric rate") from None
        if len(values) != m:
            raise ProblemFormatError(f"line {no}: expected {m} rates, found {len(values)}")
        rows.append(values)
    extra = {}
    for no, toks in lines[1 + n:]:
        if toks[0] not in _OPTIONAL_ROWS:
            raise ProblemFormatError(f"line {no}: unexpected record {toks[0]!r}")
        try:
            extra[toks[0]] = [int(t) for t in toks[1:]]
        except ValueError:
            raise ProblemFormatError(f"line {no}: non-integer tenant id") from None
    try:
        return AllocationProblem(links=tuple(range(n)), rbs=tuple(range(m)),
                                 rate=np.array(rows, dtype=float).reshape(n, m),
                                 l_max=l_max, r_th=r_th, **extra)
    except ValueError as exc:
        raise ProblemFormatError(str(exc)) from None


def write_problem(p: AllocationProblem, path) -> None:
    Path(path).write_text(format_problem(p))


def read_problem(path) -> AllocationProblem:
    return parse_problem(Path(path).read_text())
