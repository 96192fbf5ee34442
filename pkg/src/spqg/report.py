"""Delimited output and rendered figures for experiment results.

The CSV is the canonical artifact (byte-deterministic for a fixed config and
seed); each fitted series additionally gets a gnuplot-ready two-column .dat
file and a log-log PNG with the fitted power law drawn through the points.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "CSV_HEADER",
    "PROBE_HEADER",
    "write_csv",
    "write_series_dat",
    "write_probe_csv",
    "render_series_figure",
    "render_probe_figure",
]

CSV_HEADER = "experiment,delta,norm_name,value,exponent,residual,grid_n,box_l,seed"
PROBE_HEADER = "k,nu,delta,q,r,t_max,lhs,rhs,ratio,fitted_exponent,residual"


def _num(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(records, path) -> None:
    lines = [CSV_HEADER]
    for r in records:
        lines.append(",".join([
            r.experiment,
            _num(float(r.delta)),
            r.norm_name,
            _num(float(r.value)),
            _num(r.exponent),
            _num(r.residual),
            str(r.grid_n),
            _num(float(r.box_l)),
            str(r.seed),
        ]))
    Path(path).write_text("\n".join(lines) + "\n")


def write_series_dat(series, path) -> None:
    """Two-column (delta, value) file, delta descending."""
    rows = sorted(series, key=lambda r: -r.delta)
    lines = [f"{_num(float(r.delta))} {_num(float(r.value))}" for r in rows]
    Path(path).write_text("\n".join(lines) + "\n")


def write_probe_csv(rows, path) -> None:
    lines = [PROBE_HEADER]
    for row in rows:
        lines.append(",".join([
            str(row["k"]),
            _num(float(row["nu"])),
            _num(float(row["delta"])),
            _num(float(row["q"])),
            str(row["r"]),
            _num(float(row["t_max"])),
            _num(float(row["lhs"])),
            _num(float(row["rhs"])),
            _num(float(row["ratio"])),
            _num(row["fitted_exponent"]),
            _num(row["residual"]),
        ]))
    Path(path).write_text("\n".join(lines) + "\n")


def render_series_figure(series, path) -> None:
    """Log-log scatter of a fitted delta series with its power-law line."""
    rows = sorted(series, key=lambda r: r.delta)
    x = np.array([r.delta for r in rows])
    y = np.array([r.value for r in rows])
    exp = rows[0].exponent
    fig, ax = plt.subplots(figsize=(4.8, 3.6))
    ax.loglog(x, y, "o", color="tab:blue", label="measured")
    if exp is not None and np.all(y > 0):
        c = math.exp(float(np.mean(np.log(y) - exp * np.log(x))))
        xs = np.geomspace(x.min(), x.max(), 64)
        ax.loglog(xs, c * xs**exp, "-", color="tab:orange",
                  label=f"fit: slope {exp:.3f}")
    ax.set_xlabel("delta")
    ax.set_ylabel(rows[0].norm_name)
    ax.set_title(f"{rows[0].experiment}: {rows[0].norm_name}")
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_probe_figure(rows, path) -> None:
    """Measured Strichartz ratios against the dyadic index."""
    fig, ax = plt.subplots(figsize=(4.8, 3.6))
    deltas = sorted({row["delta"] for row in rows}, reverse=True)
    for d in deltas:
        pts = [(row["k"], row["ratio"]) for row in rows if row["delta"] == d]
        pts.sort()
        ax.semilogy([k for k, _ in pts], [v for _, v in pts], "o-",
                    label=f"delta={d:g}")
    ax.set_xlabel("dyadic index k")
    ax.set_ylabel("measured / bound")
    ax.set_title("Strichartz ratio stability")
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
