"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that is repeated in the pytest terminal
summary. The sweeps are long; run only this file with
``pytest tests/test_acceptance.py``.
"""

import time

import mpmath as mp
import numpy as np
import pytest

from d2dshare.channel import (ChannelRealization, cue_sinr, d2d_sinr, dbm_to_watts, noise_power_w,
                              link_gain, path_loss_cue_db, path_loss_d2d_db, realize_channel)
from d2dshare.experiment import (METHODS, dominance_violations, links_config, utilization_config, range_config,
                                 run_trial, sinr_cdf, sinr_csv, sweep_csv, sweep_links, sweep_range,
                                 sweep_utilization, trial_log_csv)
from d2dshare.ilp import AllocationProblem, solve_exact, solve_oracle
from d2dshare.model import ScenarioConfig

pytestmark = pytest.mark.slow

SEED = 0
FAST_TRIALS = 200
RANGE_TRIALS = 1000      # see the range test for why this point count is larger
LINK_VALUES = (10, 16, 20, 30, 40)
UTIL_VALUES = (0.2, 0.4, 0.6, 0.8, 1.0)
RANGE_VALUES = (25, 50, 75, 100, 125, 150)


@pytest.fixture(scope="module")
def links_sweep():
    t0 = time.perf_counter()
    res = sweep_links(links_config(rng_seed=SEED), values=LINK_VALUES, trials=FAST_TRIALS)
    return res, time.perf_counter() - t0


# ---------------------------------------------------------------------------

def test_1_oracle_equivalence(acceptance_report):
    rng = np.random.default_rng(2024)
    n_inst, mismatches = 1000, []
    t0 = time.perf_counter()
    for k in range(n_inst):
        n, m = int(rng.integers(1, 6)), int(rng.integers(1, 11))
        rate = rng.uniform(1, 10, (n, m)) * (rng.random((n, m)) < rng.uniform(0.3, 1.0))
        r_th = 0.0 if k % 2 == 0 else float(rng.uniform(1, 15))
        p = AllocationProblem(tuple(range(n)), tuple(range(m)), rate, int(rng.integers(1, 4)), r_th)
        a, _ = solve_exact(p)
        o = solve_oracle(p)
        if a.status != o.status or abs(a.objective_bps - o.objective_bps) > 1e-9 * max(1.0, o.objective_bps):
            mismatches.append(k)
    elapsed = time.perf_counter() - t0
    ok = not mismatches and elapsed <= 60
    acceptance_report("criterion 1", ok, f"{n_inst} instances, {len(mismatches)} mismatches, {elapsed:.1f}s (<= 60s)")
    assert ok


def fuzzed_config(rng, index):
    k_a, k_b = int(rng.integers(2, 40)), int(rng.integers(2, 40))
    return ScenarioConfig(
        num_cues=int(rng.integers(0, k_a + k_b + 1)),
        num_d2d_links=int(rng.integers(1, min(20, k_a + k_b) + 1)),
        rb_pool_sizes=(k_a, k_b),
        cue_split=(0.5, 0.5) if rng.random() < 0.5 else (2 / 3, 1 / 3),
        cue_utilization=(float(rng.uniform(0, 1)), float(rng.uniform(0, 1))),
        max_d2d_range_m=float(rng.uniform(5, 200)),
        l_max=int(rng.integers(1, 5)),
        gamma_th_db=float(rng.uniform(-5, 10)),
        gamma_tilde_th_db=float(rng.uniform(0, 10)),
        r_th_bps=float(rng.choice([0.0, 180e3, 360e3])),
        rng_seed=index,
    )


@pytest.fixture(scope="module")
def fuzzed_trials():
    rng = np.random.default_rng(77)
    return [run_trial(fuzzed_config(rng, i), i) for i in range(1000)]


def test_2_constraint_verification(fuzzed_trials, acceptance_report):
    checked = bad = 0
    for trial in fuzzed_trials:
        for r in trial.methods.values():
            if r.feasible or r.relaxed:
                checked += 1
                bad += r.violations > 0
    ok = bad == 0 and checked > 0
    acceptance_report("criterion 2", ok, f"{len(fuzzed_trials)} fuzzed trials, {checked} feasible or relaxed "
                                         f"outputs verified, {bad} with violations")
    assert ok


def test_3_dominance_chain(fuzzed_trials, links_sweep, acceptance_report):
    trials = list(fuzzed_trials) + [t for pt in links_sweep[0].points for t in pt.trials]
    feasible = [t for t in trials if t.all_feasible()]
    broken = [(t.trial_index, dominance_violations(t)) for t in feasible if dominance_violations(t)]
    ok = not broken and len(feasible) >= 100
    acceptance_report("criterion 3", ok, f"{len(feasible)} all-feasible trials of {len(trials)}, "
                                         f"{len(broken)} break the chain")
    assert ok, broken[:5]


def test_4_links_sweep(links_sweep, acceptance_report):
    res, elapsed = links_sweep
    opt, intra = np.array(res.means("inter_optimal")), np.array(res.means("intra_optimal"))
    gains = opt / intra - 1
    avg = float(gains.mean())
    ok = bool(np.all(gains > 0)) and 0.03 < avg < 0.30 and elapsed <= 15 * 60
    detail = ", ".join(f"I={v}: {g:+.1%}" for v, g in zip(res.values, gains))
    acceptance_report("criterion 4", ok, f"inter- vs intra-optimal gain {detail}; average {avg:.1%} "
                                         f"in (3%, 30%); {elapsed:.0f}s")
    assert ok


def test_5_utilization_sweep(acceptance_report):
    res = sweep_utilization(utilization_config(rng_seed=SEED), values=UTIL_VALUES, trials=FAST_TRIALS)
    monotone = {m: all(b <= a for a, b in zip(res.means(m), res.means(m)[1:])) for m in METHODS}
    gap = np.array(res.means("inter_optimal")) / np.array(res.means("intra_optimal")) - 1
    peak = bool(np.all(gap[-1] >= gap))
    ok = all(monotone.values()) and peak
    acceptance_report("criterion 5", ok, f"non-increasing per method {monotone}; gap "
                      + ", ".join(f"{u}: {g:.3f}" for u, g in zip(UTIL_VALUES, gap)) + f"; peak at 1.0: {peak}")
    assert ok


def test_6_range_sweep(acceptance_report):
    # Adjacent points of the widening-gap check differ by under 0.01 in relative
    # gap, about the size of the trial noise at 200 trials, so the sweep is run
    # with 1000 trials per point.
    res = sweep_range(range_config(rng_seed=SEED), values=RANGE_VALUES, trials=RANGE_TRIALS)
    decreasing = {m: all(b < a for a, b in zip(res.means(m), res.means(m)[1:])) for m in METHODS}
    gap = np.array(res.means("inter_optimal")) / np.array(res.means("intra_heuristic")) - 1
    widening = bool(np.all(np.diff(gap) > 0))
    ok = all(decreasing.values()) and widening
    acceptance_report("criterion 6", ok, f"{RANGE_TRIALS} trials/point; strictly decreasing {decreasing}; "
                      "inter-optimal over intra-heuristic "
                      + ", ".join(f"{v}m: {g:.4f}" for v, g in zip(RANGE_VALUES, gap)))
    assert ok


def test_7_sinr_median_ordering(links_sweep, acceptance_report):
    pt = links_sweep[0].point(20)
    med = {m: sinr_cdf(pt.sinr_samples(m)).percentile(50) for m in METHODS}
    ok = med["inter_optimal"] > med["inter_heuristic"] and med["intra_optimal"] > med["intra_heuristic"]
    acceptance_report("criterion 7", ok, "median effective SINR at I=20: "
                      + ", ".join(f"{m} {v:.2f} dB" for m, v in med.items()))
    assert ok


def test_8_byte_identical_rerun(links_sweep, acceptance_report):
    first = links_sweep[0]
    again = sweep_links(links_config(rng_seed=SEED), values=LINK_VALUES, trials=FAST_TRIALS)
    same = {fn.__name__: fn(first) == fn(again) for fn in (trial_log_csv, sweep_csv, sinr_csv)}
    ok = all(same.values())
    acceptance_report("criterion 8", ok, f"links sweep re-run, identical CSV text: {same}")
    assert ok


def test_9_channel_golden(acceptance_report):
    mp.mp.dps = 50
    ten = mp.mpf(10)
    noise = ten ** ((mp.mpf(-174) + 10 * mp.log10(180000) - 30) / 10)
    checks = {
        "PL_d2d(50 m)": (path_loss_d2d_db(0.05), 148 + 40 * mp.log10(mp.mpf("0.05"))),
        "PL_cue(400 m)": (path_loss_cue_db(0.4), mp.mpf("128.1") + mp.mpf("37.6") * mp.log10(mp.mpf("0.4"))),
        "gain(95.959 dB, +8 dB)": (link_gain(95.959, 8.0), ten ** (-(mp.mpf("95.959") + 8) / 10)),
        "noise(180 kHz)": (noise_power_w(-174, 180e3), noise),
        "noise(1 Hz)": (noise_power_w(-174, 1), ten ** (mp.mpf(-204) / 10)),
    }
    cfg = ScenarioConfig(gamma_th_db=-100, gamma_tilde_th_db=10)
    g_cb = 1e-12 / dbm_to_watts(20)
    g_db = 9.283e-14 / dbm_to_watts(15)
    ch = realize_channel([4.018e-11], [[0.0]], [g_cb], [g_db], [-1], [0], cfg)
    assert isinstance(ch, ChannelRealization)
    checks["SINR(no CUE)"] = (d2d_sinr(0, 0, ch), ten ** mp.mpf("1.5") * mp.mpf("1e-3") * mp.mpf("4.018e-11") / noise)
    checks["CUE SINR"] = (cue_sinr(0, 0, ch), mp.mpf("1e-12") / (mp.mpf("9.283e-14") + noise))
    errors = {k: abs(mp.mpf(v) - ref) / abs(ref) for k, (v, ref) in checks.items()}
    worst = max(errors.values())
    ok = worst <= 1e-9
    acceptance_report("criterion 9", ok, f"{len(checks)} values vs 50-digit recomputation, "
                                         f"worst relative error {float(worst):.2e} (<= 1e-9)")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
