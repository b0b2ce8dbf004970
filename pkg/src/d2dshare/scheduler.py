"""Round-robin assignment of cellular users to orthogonal RBs of their own tenant."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import InvalidConfigError, ScenarioConfig, Topology


@dataclass(frozen=True)
class CueSchedule:
    """One-to-one map between active CUEs and the RBs they occupy."""

    rb_to_cue: dict[int, int]
    cue_to_rb: dict[int, int]

    def cue_on(self, rb: int):
        return self.rb_to_cue.get(rb)

    def occupancy(self, num_rbs: int) -> np.ndarray:
        """CUE id occupying each RB, -1 where the RB is idle."""
        occ = np.full(num_rbs, -1, dtype=int)
        for rb, cue in self.rb_to_cue.items():
            occ[rb] = cue
        return occ


def active_rb_count(utilization: float, pool_size: int) -> int:
    # guard against 0.2 * 25 = 5.000000000000001
    return int(math.ceil(round(utilization * pool_size, 9)))


def schedule_cues(topology: Topology, cfg: ScenarioConfig, trial_index: int = 0) -> CueSchedule:
    """Place each tenant's lowest-index CUEs on consecutive RBs of its pool.

    Tenant n occupies ``ceil(cue_utilization[n] * K_n)`` RBs (capped by its
    CUE count). The first occupied RB rotates by one position per trial so
    that, over ``K_n`` trials, every RB carries the same load.
    """
    rb_to_cue: dict[int, int] = {}
    cue_to_rb: dict[int, int] = {}
    for n, pool in enumerate(topology.rb_pools):
        size = len(pool)
        wanted = active_rb_count(cfg.cue_utilization[n], size)
        if wanted > size:
            raise InvalidConfigError(f"tenant {n}: {wanted} active CUEs but only {size} RBs")
        members = topology.cues_of(n)
        active = members[: min(wanted, len(members))]
        offset = trial_index % size if size else 0
        for j, cue in enumerate(active):
            rb = pool[(offset + j) % size]
            rb_to_cue[rb] = int(cue)
            cue_to_rb[int(cue)] = rb
    return CueSchedule(rb_to_cue=rb_to_cue, cue_to_rb=cue_to_rb)
