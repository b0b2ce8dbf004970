"""Path loss, link gains, SINR and the per-(link, RB) achievable-rate table.

The channel is frequency flat: a link gain is the same on every RB, so rates
differ across RBs only through which CUE (if any) transmits on that RB.
UE-to-UE links (the D2D desired link and CUE -> D2D receiver interference)
use the D2D path-loss model; UE-to-BS links use the cellular model.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .model import ScenarioConfig, Topology
from .scheduler import CueSchedule


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0) if np.ndim(db) else 10.0 ** (db / 10.0)


def linear_to_db(ratio):
    return 10.0 * np.log10(ratio) if np.ndim(ratio) else 10.0 * math.log10(ratio)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def path_loss_d2d_db(d_km):
    """D2D path loss 148 + 40 log10(d), d in km."""
    d = np.asarray(d_km, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    out = 148.0 + 40.0 * np.log10(d)
    return float(out) if out.ndim == 0 else out


def path_loss_cue_db(d_km):
    """Cellular (UE to BS) path loss 128.1 + 37.6 log10(d), d in km."""
    d = np.asarray(d_km, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    out = 128.1 + 37.6 * np.log10(d)
    return float(out) if out.ndim == 0 else out


def link_gain(pl_db, shadow_db=0.0, cap: float = 1.0):
    """Linear gain of a link with path loss ``pl_db`` and shadowing
    ``shadow_db``; a positive shadowing value adds loss."""
    g = np.minimum(10.0 ** (-(np.asarray(pl_db, dtype=float) + shadow_db) / 10.0), cap)
    return float(g) if g.ndim == 0 else g


def noise_power_w(psd_dbm_hz: float, bw_hz: float) -> float:
    """Thermal noise power in watts over ``bw_hz``."""
    if bw_hz <= 0:
        raise ValueError("bandwidth must be positive")
    return dbm_to_watts(psd_dbm_hz + 10.0 * math.log10(bw_hz))


def shannon_rate(sinr, bw_hz: float):
    """Achievable rate in bit/s for a linear SINR."""
    s = np.asarray(sinr, dtype=float)
    if np.any(s < 0):
        raise ValueError("SINR must be non-negative")
    r = bw_hz * np.log2(1.0 + s)
    return float(r) if r.ndim == 0 else r


@dataclass(frozen=True)
class ChannelRealization:
    """Gains drawn for one trial plus the derived SINR and rate tables.

    ``rate_table[i, k]`` is 0 wherever link i may not use RB k, either
    because its SINR misses the D2D threshold or because it would push the
    co-channel CUE below its protection threshold; ``feasible`` carries the
    same mask explicitly.
    """

    g_dd: np.ndarray            # (I,) desired D2D link gain
    g_cd: np.ndarray            # (C, I) CUE tx -> D2D rx
    g_cb: np.ndarray            # (C,) CUE -> BS
    g_db: np.ndarray            # (I,) D2D tx -> BS
    occupancy: np.ndarray       # (K,) CUE id on each RB, -1 if idle
    rb_tenant: np.ndarray       # (K,) owning tenant of each RB
    sinr_table: np.ndarray      # (I, K) linear D2D SINR
    feasible: np.ndarray        # (I, K) bool
    rate_table: np.ndarray      # (I, K) bit/s
    noise_power_w: float
    p_cue_w: float
    p_due_w: float
    interference_w: float
    gamma_th: float
    gamma_tilde_th: float
    rb_bandwidth_hz: float

    @property
    def num_links(self) -> int:
        return len(self.g_dd)

    @property
    def num_rbs(self) -> int:
        return len(self.occupancy)

    def cue_on(self, rb: int) -> Optional[int]:
        if not 0 <= rb < len(self.occupancy):
            raise KeyError(f"unknown RB {rb}")
        cue = int(self.occupancy[rb])
        return None if cue < 0 else cue


def d2d_sinr(link: int, rb: int, ch: ChannelRealization, cue_on_rb: Optional[int] = -1) -> float:
    """SINR at the receiver of ``link`` on ``rb``.

    The only interferer is the CUE scheduled on ``rb``; D2D links are kept
    orthogonal to each other. Pass ``cue_on_rb`` to override the schedule
    (None for an idle RB).
    """
    cue = ch.cue_on(rb) if cue_on_rb == -1 else cue_on_rb
    denom = ch.interference_w + ch.noise_power_w
    if cue is not None:
        denom += ch.g_cd[cue, link] * ch.p_cue_w
    return float(ch.g_dd[link] * ch.p_due_w / denom)


def cue_sinr(cue: int, link: Optional[int], ch: ChannelRealization) -> float:
    """Uplink SINR of ``cue`` at the BS when ``link`` reuses its RB."""
    denom = ch.interference_w + ch.noise_power_w
    if link is not None:
        denom += ch.g_db[link] * ch.p_due_w
    return float(ch.g_cb[cue] * ch.p_cue_w / denom)


def cue_protection_ok(cue: int, link: int, ch: ChannelRealization) -> bool:
    """Whether ``cue`` still meets its SINR threshold if ``link`` shares its RB."""
    return cue_sinr(cue, link, ch) >= ch.gamma_tilde_th


def draw_gains(topology: Topology, cfg: ScenarioConfig, rng: np.random.Generator):
    """Path loss plus log-normal shadowing for every link pair.

    Normal draws are taken in a fixed order and scaled by sigma, so the
    random stream does not depend on the shadowing level.
    """
    min_km = cfg.min_distance_m / 1000.0
    sigma = cfg.shadowing_sigma_db
    I, C = topology.num_links, topology.num_cues
    tx, rx = topology.tx_positions, topology.rx_positions
    cues, bs = topology.cue_positions, topology.bs_position

    def km(d):
        return np.maximum(np.asarray(d, dtype=float) / 1000.0, min_km)

    d_dd = km(np.linalg.norm(tx - rx, axis=1)) if I else np.zeros(0)
    d_cd = km(np.linalg.norm(cues[:, None, :] - rx[None, :, :], axis=2)) if I and C else np.zeros((C, I))
    d_cb = km(np.linalg.norm(cues - bs, axis=1)) if C else np.zeros(0)
    d_db = km(np.linalg.norm(tx - bs, axis=1)) if I else np.zeros(0)

    s_dd = sigma * rng.standard_normal(I)
    s_cd = sigma * rng.standard_normal((C, I))
    s_cb = sigma * rng.standard_normal(C)
    s_db = sigma * rng.standard_normal(I)

    g_dd = link_gain(path_loss_d2d_db(d_dd), s_dd) if I else np.zeros(0)
    g_cd = link_gain(path_loss_d2d_db(d_cd), s_cd) if I and C else np.zeros((C, I))
    g_cb = link_gain(path_loss_cue_db(d_cb), s_cb) if C else np.zeros(0)
    g_db = link_gain(path_loss_cue_db(d_db), s_db) if I else np.zeros(0)
    return (np.atleast_1d(g_dd), np.atleast_2d(g_cd).reshape(C, I),
            np.atleast_1d(g_cb), np.atleast_1d(g_db))


def realize_channel(g_dd, g_cd, g_cb, g_db, occupancy, rb_tenant, cfg: ScenarioConfig) -> ChannelRealization:
    """Assemble SINR, feasibility mask and rate table from given gains."""
    g_dd = np.asarray(g_dd, dtype=float)
    g_cd = np.asarray(g_cd, dtype=float)
    g_cb = np.asarray(g_cb, dtype=float)
    g_db = np.asarray(g_db, dtype=float)
    occupancy = np.asarray(occupancy, dtype=int)
    p_c = dbm_to_watts(cfg.p_cue_dbm)
    p_d = dbm_to_watts(cfg.p_due_dbm)
    n0 = noise_power_w(cfg.noise_psd_dbm_hz, cfg.rb_bandwidth_hz)
    base = cfg.inter_cell_interference_w + n0
    gamma_th = db_to_linear(cfg.gamma_th_db)
    gamma_tilde = db_to_linear(cfg.gamma_tilde_th_db)

    I, K = len(g_dd), len(occupancy)
    busy = occupancy >= 0
    cue_idx = np.where(busy, occupancy, 0)

    interference = np.zeros((I, K))
    if I and busy.any():
        interference[:, busy] = (g_cd[cue_idx[busy], :] * p_c).T
    sinr = (g_dd * p_d)[:, None] / (interference + base)

    cue_ok = np.ones((I, K), dtype=bool)
    if I and busy.any():
        cue_sinr_tab = (g_cb[cue_idx[busy]] * p_c)[None, :] / ((g_db * p_d)[:, None] + base)
        cue_ok[:, busy] = cue_sinr_tab >= gamma_tilde

    feasible = (sinr >= gamma_th) & cue_ok
    rate = np.where(feasible, cfg.rb_bandwidth_hz * np.log2(1.0 + sinr), 0.0)
    for arr in (sinr, feasible, rate):
        arr.setflags(write=False)

    return ChannelRealization(
        g_dd=g_dd, g_cd=g_cd, g_cb=g_cb, g_db=g_db,
        occupancy=occupancy, rb_tenant=np.asarray(rb_tenant, dtype=int),
        sinr_table=sinr, feasible=feasible, rate_table=rate,
        noise_power_w=n0, p_cue_w=p_c, p_due_w=p_d,
        interference_w=cfg.inter_cell_interference_w,
        gamma_th=gamma_th, gamma_tilde_th=gamma_tilde,
        rb_bandwidth_hz=cfg.rb_bandwidth_hz,
    )


def build_rate_table(topology: Topology, schedule: CueSchedule, cfg: ScenarioConfig,
                     rng: np.random.Generator) -> ChannelRealization:
    """Draw all gains for a trial and precompute the rate table."""
    gains = draw_gains(topology, cfg, rng)
    occupancy = schedule.occupancy(cfg.total_rbs)
    return realize_channel(*gains, occupancy, topology.rb_tenant, cfg)


def dump_channel_csv(ch: ChannelRealization, out_dir) -> list[Path]:
    """Write the rate table (bit/s) and gain matrices (dB) as CSV files."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    def write(name, header, rows):
        path = out_dir / name
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
        written.append(path)

    K = ch.num_rbs
    write("rate_table.csv", ["link"] + [f"rb{k}" for k in range(K)],
          ([i] + [repr(float(v)) for v in row] for i, row in enumerate(ch.rate_table)))
    write("gains_d2d_db.csv", ["link", "g_dd_db", "g_db_db"],
          ([i, repr(float(linear_to_db(a))), repr(float(linear_to_db(b)))]
           for i, (a, b) in enumerate(zip(ch.g_dd, ch.g_db))))
    write("gains_cue_db.csv", ["cue", "g_cb_db"] + [f"to_link{i}_db" for i in range(ch.num_links)],
          ([c, repr(float(linear_to_db(ch.g_cb[c])))] + [repr(float(linear_to_db(v))) for v in ch.g_cd[c]]
           for c in range(len(ch.g_cb))))
    return written
