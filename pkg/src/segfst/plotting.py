"""Figures for evaluation reports, rendered straight to files."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_STYLE = {
    "font.size": 10,
    "axes.labelsize": 10,
    "axes.titlesize": 11,
    "legend.fontsize": 9,
    "xtick.labelsize": 9,
    "ytick.labelsize": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def plot_length_histograms(
    histograms: Mapping[str, Mapping[str, int]],
    path: str | Path,
    title: str = "Segment lengths",
) -> Path:
    """Grouped bar chart, one bar series per named histogram (shared bins)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(histograms)
    bins = list(next(iter(histograms.values()))) if names else []
    width = 0.8 / max(len(names), 1)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(6.0, 3.6))
        for k, name in enumerate(names):
            xs = [i + (k - (len(names) - 1) / 2) * width for i in range(len(bins))]
            ax.bar(xs, [histograms[name].get(b, 0) for b in bins], width=width, label=name)
        ax.set_xticks(range(len(bins)))
        ax.set_xticklabels(bins)
        ax.set_xlabel("segment length (tokens)")
        ax.set_ylabel("segments")
        ax.set_title(title)
        if len(names) > 1:
            ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(path, dpi=150)
        plt.close(fig)
    return path
