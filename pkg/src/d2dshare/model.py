"""Scenario configuration, topology types and random topology generation."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

SQRT3 = math.sqrt(3.0)

TENANT_NAMES = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"


class InvalidConfigError(ValueError):
    """Raised when a scenario configuration cannot be simulated."""


@dataclass(frozen=True)
class ScenarioConfig:
    """All tunable parameters of one simulated scenario.

    The defaults follow the single-cell setup with two tenants: a 400 m
    hexagonal cell, 50 CUEs and a 10 MHz carrier (50 RBs of 180 kHz) split
    33/17 between a popular tenant A and a smaller tenant B.
    """

    num_tenants: int = 2
    cell_radius_m: float = 400.0
    max_d2d_range_m: float = 100.0
    num_cues: int = 50
    num_d2d_links: int = 20
    cue_split: tuple[float, ...] = (2.0 / 3.0, 1.0 / 3.0)
    rb_pool_sizes: tuple[int, ...] = (33, 17)
    cue_utilization: tuple[float, ...] = (1.0, 1.0)
    p_cue_dbm: float = 20.0
    p_due_dbm: float = 15.0
    l_max: int = 4
    gamma_th_db: float = 0.0
    gamma_tilde_th_db: float = 5.0
    r_th_bps: float = 180e3
    shadowing_sigma_db: float = 8.0
    noise_psd_dbm_hz: float = -174.0
    rb_bandwidth_hz: float = 180e3
    inter_cell_interference_w: float = 0.0
    min_distance_m: float = 1.0
    # Explicit per-link initiator tenants; None means alternate A, B, A, B, ...
    initiator_tenants: Optional[tuple[int, ...]] = None
    rng_seed: int = 0

    def __post_init__(self):
        # YAML/JSON loaders hand us lists; keep the dataclass hashable.
        for name in ("cue_split", "rb_pool_sizes", "cue_utilization"):
            value = getattr(self, name)
            if not isinstance(value, tuple):
                object.__setattr__(self, name, tuple(value))
        if self.initiator_tenants is not None and not isinstance(self.initiator_tenants, tuple):
            object.__setattr__(self, "initiator_tenants", tuple(self.initiator_tenants))

    @property
    def total_rbs(self) -> int:
        return int(sum(self.rb_pool_sizes))

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        for key, value in out.items():
            if isinstance(value, tuple):
                out[key] = list(value)
        return out

    def validate(self) -> "ScenarioConfig":
        n = self.num_tenants
        if n < 2:
            raise InvalidConfigError("num_tenants must be at least 2")
        for name in ("cue_split", "rb_pool_sizes", "cue_utilization"):
            if len(getattr(self, name)) != n:
                raise InvalidConfigError(f"{name} must have one entry per tenant ({n})")
        if not math.isclose(sum(self.cue_split), 1.0, abs_tol=1e-9):
            raise InvalidConfigError(f"cue_split must sum to 1, got {sum(self.cue_split)}")
        if any(not 0.0 <= f <= 1.0 for f in self.cue_split):
            raise InvalidConfigError("cue_split fractions must lie in [0, 1]")
        if any(not 0.0 <= u <= 1.0 for u in self.cue_utilization):
            raise InvalidConfigError("cue_utilization fractions must lie in [0, 1]")
        if any(int(k) < 1 for k in self.rb_pool_sizes):
            raise InvalidConfigError("every tenant needs at least one RB")
        if self.num_cues < 0 or self.num_d2d_links < 0:
            raise InvalidConfigError("user counts must be non-negative")
        if self.l_max < 1:
            raise InvalidConfigError("l_max must be at least 1")
        if self.num_d2d_links > self.total_rbs:
            raise InvalidConfigError(
                f"num_d2d_links={self.num_d2d_links} exceeds the {self.total_rbs} RBs available")
        if self.cell_radius_m <= 0:
            raise InvalidConfigError("cell_radius_m must be positive")
        if self.max_d2d_range_m <= 0:
            raise InvalidConfigError("max_d2d_range_m must be positive")
        if self.rb_bandwidth_hz <= 0:
            raise InvalidConfigError("rb_bandwidth_hz must be positive")
        if self.shadowing_sigma_db < 0:
            raise InvalidConfigError("shadowing_sigma_db must be non-negative")
        if self.min_distance_m <= 0:
            raise InvalidConfigError("min_distance_m must be positive")
        if self.initiator_tenants is not None:
            if len(self.initiator_tenants) != self.num_d2d_links:
                raise InvalidConfigError("initiator_tenants needs one entry per D2D link")
            if any(not 0 <= t < n for t in self.initiator_tenants):
                raise InvalidConfigError("initiator_tenants entries must be valid tenant ids")
        return self


@dataclass(frozen=True)
class Topology:
    """Node positions and tenant memberships for one trial.

    Positions are in meters relative to the base station at the origin.
    RB ids are dense over the fused pool; ``rb_pools[n]`` lists tenant n's
    RBs in pool order.
    """

    cue_positions: np.ndarray          # (C, 2)
    cue_tenant: np.ndarray             # (C,)
    tx_positions: np.ndarray           # (I, 2)
    rx_positions: np.ndarray           # (I, 2)
    initiator_tenant: np.ndarray       # (I,)
    receiver_tenant: np.ndarray        # (I,)
    rb_pools: tuple[tuple[int, ...], ...]
    bs_position: np.ndarray = field(default_factory=lambda: np.zeros(2))

    @property
    def num_cues(self) -> int:
        return len(self.cue_positions)

    @property
    def num_links(self) -> int:
        return len(self.tx_positions)

    @property
    def num_tenants(self) -> int:
        return len(self.rb_pools)

    @property
    def fused_pool(self) -> tuple[int, ...]:
        return tuple(rb for pool in self.rb_pools for rb in pool)

    @property
    def rb_tenant(self) -> np.ndarray:
        """Owning tenant of every RB id in the fused pool."""
        owner = np.empty(sum(len(p) for p in self.rb_pools), dtype=int)
        for n, pool in enumerate(self.rb_pools):
            owner[list(pool)] = n
        return owner

    def link_lengths(self) -> np.ndarray:
        return np.linalg.norm(self.tx_positions - self.rx_positions, axis=1)

    def cues_of(self, tenant: int) -> np.ndarray:
        return np.flatnonzero(self.cue_tenant == tenant)


def point_in_hexagon(p: Sequence[float], radius: float) -> bool:
    """True iff ``p`` lies in the flat-top hexagon of circumradius ``radius``
    centred at the origin (boundary included)."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    x, y = abs(float(p[0])), abs(float(p[1]))
    return bool(y <= radius * SQRT3 / 2 and SQRT3 * x + y <= SQRT3 * radius)


def _in_hexagon(points: np.ndarray, radius: float) -> np.ndarray:
    x = np.abs(points[:, 0])
    y = np.abs(points[:, 1])
    return (y <= radius * SQRT3 / 2) & (SQRT3 * x + y <= SQRT3 * radius)


def sample_in_hexagon(n: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` points uniformly inside the hexagon by rejection from its
    bounding rectangle."""
    out = np.empty((n, 2))
    filled = 0
    half_height = radius * SQRT3 / 2
    while filled < n:
        # acceptance rate of the bounding box is 3/4
        batch = max(8, int((n - filled) * 1.4) + 1)
        pts = np.column_stack((rng.uniform(-radius, radius, batch),
                               rng.uniform(-half_height, half_height, batch)))
        pts = pts[_in_hexagon(pts, radius)][: n - filled]
        out[filled:filled + len(pts)] = pts
        filled += len(pts)
    return out


def split_counts(total: int, fractions: Sequence[float]) -> list[int]:
    """Largest-remainder rounding of ``total * fractions``; ties go to the
    lower tenant id."""
    exact = [total * f for f in fractions]
    counts = [int(math.floor(e + 1e-12)) for e in exact]
    short = total - sum(counts)
    order = sorted(range(len(fractions)), key=lambda n: (-(exact[n] - counts[n]), n))
    for n in order[:short]:
        counts[n] += 1
    return counts


def make_rb_pools(pool_sizes: Sequence[int]) -> tuple[tuple[int, ...], ...]:
    pools, start = [], 0
    for size in pool_sizes:
        pools.append(tuple(range(start, start + int(size))))
        start += int(size)
    return tuple(pools)


def link_tenants(cfg: ScenarioConfig) -> tuple[np.ndarray, np.ndarray]:
    """Initiator and receiver tenant of every D2D link."""
    if cfg.initiator_tenants is not None:
        initiator = np.asarray(cfg.initiator_tenants, dtype=int)
    else:
        initiator = np.arange(cfg.num_d2d_links) % cfg.num_tenants
    receiver = (initiator + 1) % cfg.num_tenants
    return initiator, receiver


def _sample_receivers(tx: np.ndarray, cfg: ScenarioConfig, rng: np.random.Generator,
                      max_rounds: int = 10_000) -> np.ndarray:
    rx = np.empty_like(tx)
    pending = np.arange(len(tx))
    for _ in range(max_rounds):
        if len(pending) == 0:
            return rx
        u = rng.random(len(pending))
        theta = rng.uniform(0.0, 2.0 * math.pi, len(pending))
        rho = cfg.max_d2d_range_m * np.sqrt(u)
        cand = tx[pending] + np.column_stack((rho * np.cos(theta), rho * np.sin(theta)))
        ok = _in_hexagon(cand, cfg.cell_radius_m)
        rx[pending[ok]] = cand[ok]
        pending = pending[~ok]
    raise InvalidConfigError("could not place D2D receivers inside the cell")


def generate_topology(cfg: ScenarioConfig, rng: np.random.Generator) -> Topology:
    """Drop CUEs and D2D pairs uniformly over the hexagonal cell.

    Receivers are uniform in the disc of radius ``max_d2d_range_m`` around
    their transmitter, resampled until they fall inside the cell. CUEs are
    split between tenants by largest-remainder rounding of ``cue_split``.
    """
    cfg.validate()
    cues = sample_in_hexagon(cfg.num_cues, cfg.cell_radius_m, rng)
    counts = split_counts(cfg.num_cues, cfg.cue_split)
    cue_tenant = np.repeat(np.arange(cfg.num_tenants), counts)

    tx = sample_in_hexagon(cfg.num_d2d_links, cfg.cell_radius_m, rng)
    rx = _sample_receivers(tx, cfg, rng)
    initiator, receiver = link_tenants(cfg)

    return Topology(
        cue_positions=cues,
        cue_tenant=cue_tenant,
        tx_positions=tx,
        rx_positions=rx,
        initiator_tenant=initiator,
        receiver_tenant=receiver,
        rb_pools=make_rb_pools(cfg.rb_pool_sizes),
    )
