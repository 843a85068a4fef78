"""Figures written to files: cut profiles and operation timelines."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.ticker import MaxNLocator  # noqa: E402

from .history import READ, Model, history_of  # noqa: E402


def plot_cut_profile(profile: list, m: int, path: str, title: str = "") -> None:
    """Crossing count per cut of the start order, against the 2m² bound."""
    fig, ax = plt.subplots(figsize=(7, 3.2))
    xs = [row[0] for row in profile]
    ys = [row[1] for row in profile]
    ax.step(xs, ys, where="mid", label="crossing edges")
    ax.axhline(2 * m * m, color="tab:red", linestyle="--", label=f"2m² = {2 * m * m}")
    ax.set_xlabel("cut index")
    ax.set_ylabel("edges")
    ax.set_ylim(bottom=0)
    ax.xaxis.set_major_locator(MaxNLocator(integer=True))
    ax.yaxis.set_major_locator(MaxNLocator(integer=True))
    if title:
        ax.set_title(title)
    ax.legend(loc="upper right", fontsize="small")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_timeline(model: Model, path: str, edges: list = ()) -> None:
    """One row per process, one bar per operation; optional generator edges as arrows."""
    h = history_of(model)
    procs = list(h.meta.processes)
    row = {p: i for i, p in enumerate(procs)}
    fig, ax = plt.subplots(figsize=(8, 0.8 + 0.6 * len(procs)))
    mid = {}
    for o in h.ops:
        s, r = float(o.stime), float(o.rtime)
        y = row[o.proc]
        ax.barh(y, r - s, left=s, height=0.4, color="tab:blue" if o.type == READ else "tab:orange", alpha=0.8)
        ax.text((s + r) / 2, y, o.id, ha="center", va="center", fontsize=8)
        mid[o.id] = (r, s, y)
    for a, b in edges:
        ra, _, ya = mid[a]
        _, sb, yb = mid[b]
        ax.annotate("", xy=(sb, yb), xytext=(ra, ya), arrowprops=dict(arrowstyle="->", color="gray", lw=0.8))
    ax.set_yticks(range(len(procs)), procs)
    ax.set_xlabel("time")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


__all__ = ["plot_cut_profile", "plot_timeline"]
