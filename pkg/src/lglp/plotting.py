"""Matplotlib figures written next to the CSV/JSON reports."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "font.size": 10,
    "axes.labelsize": 10,
    "axes.titlesize": 11,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
}


def figsize(width: float = 6.0, ratio: float | None = None) -> tuple[float, float]:
    if ratio is None:
        ratio = (math.sqrt(5) - 1.0) / 2.0
    return width, width * ratio


def plot_history(history: Sequence[dict], path: str | Path, title: str = "") -> Path:
    """Training loss (left axis) and test AUC (right axis) per epoch."""
    epochs = [h["epoch"] for h in history]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize())
        ax.plot(epochs, [h["train_loss"] for h in history], color="tab:blue", label="train loss")
        ax.set_xlabel("epoch")
        ax.set_ylabel("training loss", color="tab:blue")
        ax2 = ax.twinx()
        ax2.plot(epochs, [100 * h["test_auc"] for h in history], color="tab:orange",
                 label="test AUC")
        ax2.set_ylabel("test AUC (%)", color="tab:orange")
        ax2.spines["right"].set_visible(True)
        if title:
            ax.set_title(title)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return Path(path)


def plot_sweep(rows: Sequence[dict], path: str | Path, label: str = "",
               title: str = "") -> Path:
    """Mean AUC with a one-std band against the training fraction."""
    x = [100 * r["fraction"] for r in rows]
    y = [100 * r["mean_auc"] for r in rows]
    err = [100 * r["std_auc"] for r in rows]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize())
        ax.errorbar(x, y, yerr=err, marker="o", capsize=3, label=label or None)
        ax.set_xlabel("training links (%)")
        ax.set_ylabel("AUC (%)")
        if label:
            ax.legend(frameon=False)
        if title:
            ax.set_title(title)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return Path(path)
