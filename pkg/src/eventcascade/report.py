"""Figures written next to the CSV outputs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

plt.rcParams.update(
    {
        "font.size": 9,
        "axes.labelsize": 9,
        "legend.fontsize": 8,
        "xtick.labelsize": 8,
        "ytick.labelsize": 8,
        "axes.spines.top": False,
        "axes.spines.right": False,
    }
)


def plot_bench(rows, path, x=None):
    """Blocks per item against whichever grid column varies the most."""
    if x is None:
        x = max(("n", "m", "b", "r", "param"), key=lambda c: len({row[c] for row in rows}))
    fig, ax = plt.subplots(figsize=(4.2, 3.0))
    for mode in sorted({row["mode"] for row in rows}):
        pts = sorted((float(row[x]), float(row["blocks_per_item"])) for row in rows if row["mode"] == mode)
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", lw=1.2, label=mode)
    if x in ("n", "b", "m"):
        ax.set_xscale("log", base=2)
    ax.set_xlabel(x)
    ax.set_ylabel("blocks / item")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_delays(reports, truth, path):
    """Histogram of report delay relative to flow time."""
    by_key = {e.key: e for e in truth}
    ratios = []
    for r in reports:
        e = by_key.get(r.key)
        if e is not None and e.flow > 0:
            ratios.append((r.report_time - e.trigger_time) / e.flow)
    fig, ax = plt.subplots(figsize=(4.2, 3.0))
    ax.hist(ratios, bins=30, color="0.3")
    ax.set_xlabel("report delay / flow time")
    ax.set_ylabel("events")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
