import math

import numpy as np
import pytest

from d2dshare.model import ScenarioConfig, generate_topology
from d2dshare.scheduler import active_rb_count, schedule_cues


def make(cfg, seed=0):
    return generate_topology(cfg, np.random.default_rng(seed))


def test_full_utilization_is_bijection():
    cfg = ScenarioConfig(num_cues=75, rb_pool_sizes=(50, 25), cue_utilization=(1.0, 1.0))
    topo = make(cfg)
    sched = schedule_cues(topo, cfg)
    pool_a = set(topo.rb_pools[0])
    a_rbs = {rb for rb in sched.rb_to_cue if rb in pool_a}
    assert a_rbs == pool_a
    assert len(sched.rb_to_cue) == 75 == len(sched.cue_to_rb)


def test_zero_utilization_is_empty():
    cfg = ScenarioConfig(cue_utilization=(0.0, 0.0))
    assert schedule_cues(make(cfg), cfg).rb_to_cue == {}


def test_twenty_percent_of_25():
    assert active_rb_count(0.2, 25) == math.ceil(0.2 * 25) == 5
    cfg = ScenarioConfig(num_cues=50, rb_pool_sizes=(25, 25), cue_split=(0.5, 0.5), cue_utilization=(1.0, 0.2))
    topo = make(cfg)
    sched = schedule_cues(topo, cfg)
    b = [rb for rb in sched.rb_to_cue if rb in topo.rb_pools[1]]
    assert len(b) == 5


def test_orthogonal_and_own_pool():
    cfg = ScenarioConfig(num_cues=30, rb_pool_sizes=(20, 15), cue_utilization=(0.7, 0.9))
    topo = make(cfg, 4)
    for trial in range(40):
        sched = schedule_cues(topo, cfg, trial)
        assert len(set(sched.rb_to_cue.values())) == len(sched.rb_to_cue)
        for cue, rb in sched.cue_to_rb.items():
            assert sched.rb_to_cue[rb] == cue
            assert rb in topo.rb_pools[topo.cue_tenant[cue]]
        for n, pool in enumerate(topo.rb_pools):
            occupied = sum(rb in pool for rb in sched.rb_to_cue)
            assert occupied == min(active_rb_count(cfg.cue_utilization[n], len(pool)), len(topo.cues_of(n)))


def test_fewer_cues_than_wanted():
    cfg = ScenarioConfig(num_cues=10, rb_pool_sizes=(20, 10), cue_split=(0.5, 0.5))
    sched = schedule_cues(make(cfg), cfg)
    assert len(sched.rb_to_cue) == 10


def test_round_robin_rotation_is_fair():
    cfg = ScenarioConfig(num_cues=50, rb_pool_sizes=(25, 25), cue_split=(0.5, 0.5), cue_utilization=(1.0, 0.4))
    topo = make(cfg)
    k = 25
    counts = np.zeros(cfg.total_rbs, dtype=int)
    for trial in range(k):
        for rb in schedule_cues(topo, cfg, trial).rb_to_cue:
            counts[rb] += 1
    assert np.all(counts[list(topo.rb_pools[1])] >= math.floor(k * 0.4))
    assert np.all(counts[list(topo.rb_pools[0])] == k)


def test_occupancy_vector():
    cfg = ScenarioConfig(cue_utilization=(1.0, 0.0))
    sched = schedule_cues(make(cfg), cfg)
    occ = sched.occupancy(cfg.total_rbs)
    assert np.all(occ[:33] >= 0) and np.all(occ[33:] == -1)
    assert sched.cue_on(40) is None
