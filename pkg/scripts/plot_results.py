#!/usr/bin/env python3
"""Plot the aggregate CSVs produced by the fig2/fig3 campaigns.

Usage: python scripts/plot_results.py out/fig2 out/fig3
Writes convergence.png / ee_sweep.png next to each aggregate file.
"""

import csv
import math
import sys
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def plot_fig2(out_dir):
    rows = read_rows(out_dir / "fig2_aggregate.csv")
    series = defaultdict(list)
    for r in rows:
        series[float(r["p_max_dbm"])].append((int(r["iteration"]), float(r["ee_mean"])))
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for p, pts in sorted(series.items()):
        pts.sort()
        ax.plot([l for l, _ in pts], [e for _, e in pts], marker="o",
                label=f"P_max = {p:g} dBm")
    ax.set_xlabel("iteration")
    ax.set_ylabel("mean EE (bit/Hz/Joule)")
    ax.legend()
    ax.grid(True, alpha=0.4)
    fig.tight_layout()
    fig.savefig(out_dir / "convergence.png", dpi=150)
    print("wrote", out_dir / "convergence.png")


def plot_fig3(out_dir):
    rows = read_rows(out_dir / "fig3_aggregate.csv")
    series = defaultdict(list)
    for r in rows:
        if not r["ee_mean"]:
            continue
        p_bh = float(r["p_bh_dbm"])
        tag = "P_bh=0" if math.isinf(p_bh) else f"P_bh={p_bh:g} dBm"
        series[(r["method"], tag)].append((float(r["p_max_dbm"]), float(r["ee_mean"])))
    fig, ax = plt.subplots(figsize=(5.5, 4))
    for (method, tag), pts in sorted(series.items()):
        if method.startswith("cas") and tag != "P_bh=0":
            continue        # CAS has no backhaul links
        pts.sort()
        ax.plot([p for p, _ in pts], [e for _, e in pts], marker="o",
                label=f"{method} ({tag})" if method.startswith("das") else method)
    ax.set_xlabel("per-RAU transmit budget (dBm)")
    ax.set_ylabel("mean EE (bit/Hz/Joule)")
    ax.legend(fontsize=7)
    ax.grid(True, alpha=0.4)
    fig.tight_layout()
    fig.savefig(out_dir / "ee_sweep.png", dpi=150)
    print("wrote", out_dir / "ee_sweep.png")


if __name__ == "__main__":
    for arg in sys.argv[1:]:
        d = Path(arg)
        if (d / "fig2_aggregate.csv").exists():
            plot_fig2(d)
        if (d / "fig3_aggregate.csv").exists():
            plot_fig3(d)
