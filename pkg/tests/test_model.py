import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from d2dshare.model import (InvalidConfigError, ScenarioConfig, generate_topology, link_tenants,
                            point_in_hexagon, sample_in_hexagon, split_counts)


def hexagon_halfplanes(p, r):
    """Independent check: intersection of the six edge half-planes of a
    flat-top hexagon with vertices at angles 0, 60, ..., 300 degrees."""
    verts = [(r * math.cos(math.radians(60 * j)), r * math.sin(math.radians(60 * j))) for j in range(6)]
    x, y = p
    for j in range(6):
        (x1, y1), (x2, y2) = verts[j], verts[(j + 1) % 6]
        # counter-clockwise vertices: inside is to the left of every edge
        if (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1) < -1e-9:
            return False
    return True


def test_hexagon_examples():
    assert point_in_hexagon((0, 0), 400)
    assert not point_in_hexagon((400 * 1.01, 0), 400)
    assert point_in_hexagon((0, 400 * (math.sqrt(3) / 2) * 0.999), 400)
    assert not point_in_hexagon((0, 400 * (math.sqrt(3) / 2) * 1.001), 400)
    assert hexagon_halfplanes((0, 400 * (math.sqrt(3) / 2) * 0.999), 400)


def test_hexagon_rejects_bad_radius():
    with pytest.raises(ValueError):
        point_in_hexagon((0, 0), 0)


@given(st.floats(-500, 500), st.floats(-500, 500))
def test_hexagon_matches_halfplanes(x, y):
    # skip points within float noise of an edge
    inside = point_in_hexagon((x, y), 400)
    assert inside == hexagon_halfplanes((x, y), 400) or abs(
        min(400 * math.sqrt(3) / 2 - abs(y), math.sqrt(3) * 400 - math.sqrt(3) * abs(x) - abs(y))) < 1e-6


def test_sample_in_hexagon_uniform():
    rng = np.random.default_rng(7)
    pts = sample_in_hexagon(20000, 400, rng)
    assert all(point_in_hexagon(p, 400) for p in pts[:2000])
    # symmetric: means near zero, and the inner hexagon of half radius holds 1/4 of the mass
    assert abs(pts[:, 0].mean()) < 5 and abs(pts[:, 1].mean()) < 5
    inner = np.mean([point_in_hexagon(p, 200) for p in pts])
    assert inner == pytest.approx(0.25, abs=0.015)


@pytest.mark.parametrize("total,fractions,expected", [
    (50, (2 / 3, 1 / 3), [33, 17]),
    (75, (2 / 3, 1 / 3), [50, 25]),
    (10, (0.5, 0.5), [5, 5]),
    (5, (0.5, 0.5), [3, 2]),      # tie goes to tenant 0
    (7, (0.2, 0.3, 0.5), [1, 2, 4]),
    (0, (0.5, 0.5), [0, 0]),
])
def test_split_counts(total, fractions, expected):
    assert split_counts(total, fractions) == expected


def test_paper_geometry_example():
    cfg = ScenarioConfig(cell_radius_m=400, max_d2d_range_m=100, num_cues=50, num_d2d_links=20, rng_seed=3)
    topo = generate_topology(cfg, np.random.default_rng(3))
    assert topo.num_cues == 50 and topo.num_links == 20
    assert np.all(topo.link_lengths() <= 100 + 1e-9)
    assert np.all(topo.initiator_tenant != topo.receiver_tenant)
    assert list(topo.initiator_tenant[:4]) == [0, 1, 0, 1]


def test_no_links():
    topo = generate_topology(ScenarioConfig(num_d2d_links=0), np.random.default_rng(0))
    assert topo.num_links == 0
    assert topo.tx_positions.shape == (0, 2)


def test_determinism():
    cfg = ScenarioConfig(rng_seed=11)
    a = generate_topology(cfg, np.random.default_rng(11))
    b = generate_topology(cfg, np.random.default_rng(11))
    for name in ("cue_positions", "tx_positions", "rx_positions", "cue_tenant", "initiator_tenant"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


@pytest.mark.parametrize("changes", [
    dict(max_d2d_range_m=0),
    dict(cue_split=(0.7, 0.7)),
    dict(l_max=0),
    dict(num_d2d_links=60),
    dict(rb_pool_sizes=(10,)),
    dict(num_tenants=1),
    dict(cue_utilization=(1.2, 1.0)),
    dict(initiator_tenants=(0, 1)),
])
def test_invalid_configs(changes):
    with pytest.raises(InvalidConfigError):
        generate_topology(ScenarioConfig().replace(**changes), np.random.default_rng(0))


def test_explicit_initiators():
    cfg = ScenarioConfig(num_d2d_links=3, initiator_tenants=(1, 1, 0))
    init, recv = link_tenants(cfg)
    assert list(init) == [1, 1, 0] and list(recv) == [0, 0, 1]


def test_topology_invariants_over_many_seeds():
    cfg = ScenarioConfig(num_cues=10, num_d2d_links=6, rb_pool_sizes=(4, 4))
    r = cfg.cell_radius_m
    for seed in range(1000):
        topo = generate_topology(cfg, np.random.default_rng(seed))
        pts = np.vstack([topo.cue_positions, topo.tx_positions, topo.rx_positions])
        assert np.all(np.abs(pts[:, 1]) <= r * math.sqrt(3) / 2 + 1e-9)
        assert np.all(math.sqrt(3) * np.abs(pts[:, 0]) + np.abs(pts[:, 1]) <= math.sqrt(3) * r + 1e-9)
        assert np.all(topo.link_lengths() <= cfg.max_d2d_range_m + 1e-9)
        assert np.all(topo.initiator_tenant != topo.receiver_tenant)
        assert np.bincount(topo.cue_tenant, minlength=2).tolist() == split_counts(10, cfg.cue_split)
        pools = [set(p) for p in topo.rb_pools]
        assert not pools[0] & pools[1] and len(topo.fused_pool) == 8


def test_link_length_distribution_uniform_in_disc():
    # a small range keeps edge rejection negligible; P(len <= x) = (x / R)^2
    cfg = ScenarioConfig(num_cues=0, num_d2d_links=40, max_d2d_range_m=50, rb_pool_sizes=(25, 25))
    lengths = np.concatenate([generate_topology(cfg, np.random.default_rng(s)).link_lengths()
                              for s in range(100)])
    assert np.median(lengths) == pytest.approx(50 / math.sqrt(2), rel=0.03)
    assert np.mean(lengths <= 25) == pytest.approx(0.25, abs=0.03)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**63 - 1), links=st.integers(0, 20), radius=st.floats(50, 1000),
       rng_range=st.floats(1, 300))
def test_generated_topology_property(seed, links, radius, rng_range):
    cfg = ScenarioConfig(cell_radius_m=radius, max_d2d_range_m=rng_range, num_d2d_links=links)
    topo = generate_topology(cfg, np.random.default_rng(seed))
    assert all(point_in_hexagon(p, radius * (1 + 1e-12)) for p in topo.rx_positions)
    assert np.all(topo.link_lengths() <= rng_range * (1 + 1e-12))
