"""Static SVG charts for sweep and SINR CSV files."""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .experiment import METHODS, SINR_COLUMNS, SWEEP_COLUMNS, sinr_cdf  # noqa: E402

LABELS = {
    "inter_optimal": "Inter-tenant optimal",
    "inter_heuristic": "Inter-tenant heuristic",
    "intra_optimal": "Intra-tenant optimal",
    "intra_heuristic": "Intra-tenant heuristic",
}
AXIS_LABELS = {
    "num_links": "Number of D2D links",
    "utilization_B": "Normalized RB utilization of tenant B",
    "max_range_m": "Maximum D2D link range (m)",
    "trial": "Scenario",
}


class SchemaError(ValueError):
    pass


def read_csv(path) -> tuple[list[str], list[dict]]:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
        header = reader.fieldnames or []
    if not header:
        raise SchemaError(f"{path}: empty file")
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return list(header), rows


def detect_kind(header: list[str]) -> str:
    if header == SWEEP_COLUMNS:
        return "sweep"
    if header == SINR_COLUMNS:
        return "sinr"
    raise SchemaError(f"unrecognised columns: {','.join(header)}")


def sweep_series(rows: list[dict]) -> dict[str, tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]]:
    """Per method: axis values, means, CI low, CI high (Mbit/s)."""
    acc = defaultdict(list)
    for r in rows:
        acc[r["method"]].append((float(r["value"]), float(r["mean_bps"]),
                                 float(r["ci_low_bps"]), float(r["ci_high_bps"])))
    out = {}
    for m, pts in acc.items():
        arr = np.array(sorted(pts))
        out[m] = (arr[:, 0], arr[:, 1] / 1e6, arr[:, 2] / 1e6, arr[:, 3] / 1e6)
    return out


def cdf_curves(rows: list[dict], value=None, kind: str = "effective") -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Per method: sorted SINR samples (dB) and their CDF in [0, 1]."""
    acc = defaultdict(list)
    for r in rows:
        if r["kind"] != kind or (value is not None and r["value"] != str(value)):
            continue
        acc[r["method"]].append(float(r["sinr_db"]))
    out = {}
    for m, samples in acc.items():
        table = sinr_cdf(samples)
        out[m] = (table.values, np.arange(1, len(table.values) + 1) / len(table.values))
    return out


def plot_sweep(rows: list[dict], out_path) -> Path:
    series = sweep_series(rows)
    axis = rows[0]["axis"]
    fig, ax = plt.subplots(figsize=(6, 4))
    for m in METHODS:
        if m not in series:
            continue
        x, mean, lo, hi = series[m]
        ax.errorbar(x, mean, yerr=[mean - lo, hi - mean], marker="o", capsize=3, label=LABELS[m])
    ax.set_xlabel(AXIS_LABELS.get(axis, axis))
    ax.set_ylabel("Sum-rate (Mbit/s)")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, format="svg")
    plt.close(fig)
    return out_path


def plot_cdf(rows: list[dict], out_path, value=None) -> Path:
    curves = cdf_curves(rows, value)
    if not curves:
        raise SchemaError("no SINR samples for the requested point")
    fig, ax = plt.subplots(figsize=(6, 4))
    for m in METHODS:
        if m in curves:
            x, y = curves[m]
            ax.step(x, y, where="post", label=LABELS[m])
    ax.set_xlabel("SINR (dB)")
    ax.set_ylabel("CDF")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="lower right")
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, format="svg")
    plt.close(fig)
    return out_path


def plot_file(csv_path, out_dir=None, value=None) -> list[Path]:
    """Render the chart(s) for a sweep or SINR CSV next to it (or in ``out_dir``)."""
    csv_path = Path(csv_path)
    out_dir = Path(out_dir) if out_dir else csv_path.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    header, rows = read_csv(csv_path)
    kind = detect_kind(header)
    if kind == "sweep":
        return [plot_sweep(rows, out_dir / f"{csv_path.stem}.svg")]
    values = [value] if value is not None else sorted({r["value"] for r in rows}, key=float)
    return [plot_cdf(rows, out_dir / f"{csv_path.stem}_cdf_{v}.svg", v) for v in values]
