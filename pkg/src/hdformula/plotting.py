"""Figures for CLI reports. Always renders off-screen (Agg) to files."""

from __future__ import annotations

from pathlib import Path
from typing import Dict, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .corpus.records import DOMAINS  # noqa: E402
from .corpus.stats import LEVEL_GROUPS, LINE_BINS, StatTable  # noqa: E402

STYLE = {
    "figure.dpi": 100,
    "savefig.dpi": 150,
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_loss_curves(curves: Dict[str, Sequence], path) -> Path:
    """One line per mode; ``curves`` maps mode name to a list of EpochLoss."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.5, 3.5))
        for mode, rows in curves.items():
            ax.plot([r.epoch for r in rows], [r.total for r in rows], label=mode, lw=1.4)
        ax.set_xlabel("epoch")
        ax.set_ylabel("mean total loss")
        ax.set_title("toy training")
        ax.legend()
        return _save(fig, path)


def plot_stat_table(table: StatTable, path) -> Path:
    """Heat map with domains down the side and (level group, line bin) across."""
    cols = [(g, b) for g, _, _ in LEVEL_GROUPS for b, _, _ in LINE_BINS]
    grid = np.array([[table.counts[(g, b, d)] for g, b in cols] for d in DOMAINS])
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(7.5, 3.6))
        im = ax.imshow(grid, cmap="Blues", aspect="auto")
        ax.set_xticks(range(len(cols)), [f"{g}{b}" for g, b in cols], rotation=60)
        ax.set_yticks(range(len(DOMAINS)), DOMAINS)
        for i in range(grid.shape[0]):
            for j in range(grid.shape[1]):
                if grid[i, j]:
                    dark = grid[i, j] > grid.max() / 2
                    ax.text(j, i, str(grid[i, j]), ha="center", va="center", fontsize=7,
                            color="white" if dark else "black")
        fig.colorbar(im, ax=ax, shrink=0.8, label="formulas")
        ax.set_title("formulas per level group, line bin and domain")
        return _save(fig, path)


def plot_eval_aggregate(aggregate: Dict[str, Dict[str, float]], path) -> Path:
    """Grouped bars of CR and BLEU, plus AED on its own axis."""
    modes = list(aggregate)
    x = np.arange(len(modes))
    with plt.rc_context(STYLE):
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(6.5, 3.2))
        ax1.bar(x - 0.18, [aggregate[m]["cr"] for m in modes], 0.36, label="CR")
        ax1.bar(x + 0.18, [aggregate[m]["bleu"] for m in modes], 0.36, label="BLEU")
        ax1.set_xticks(x, modes)
        ax1.set_ylim(min(0.0, *(aggregate[m]["cr"] for m in modes)), 1.05)
        ax1.legend()
        ax2.bar(x, [aggregate[m]["aed"] for m in modes], 0.5, color="tab:gray")
        ax2.set_xticks(x, modes)
        ax2.set_ylabel("AED")
        fig.suptitle("evaluation")
        return _save(fig, path)
