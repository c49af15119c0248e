"""Report rendering: figure panels and delimited metric files.

Every CLI command that reports results writes a CSV next to its outputs
and, where there is something to look at, a matplotlib figure rendered to
PNG. Figures are documentation artifacts; no metric is computed from them.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["save_panel_figure", "save_loss_figure", "write_metrics_csv"]


def save_panel_figure(path, panels: list[tuple[str, np.ndarray]], dpi: int = 110) -> None:
    """One row of image panels; scalar fields get a colorbar, images do not."""
    n = len(panels)
    fig, axes = plt.subplots(1, n, figsize=(3.2 * n, 3.2), squeeze=False)
    for ax, (title, data) in zip(axes[0], panels):
        if data.ndim == 3 and data.shape[2] == 3:
            ax.imshow(np.clip(data, 0.0, 1.0))
        else:
            plane = data[:, :, 0] if data.ndim == 3 else data
            im = ax.imshow(plane, cmap="viridis")
            fig.colorbar(im, ax=ax, fraction=0.046)
        ax.set_title(title, fontsize=9)
        ax.set_axis_off()
    fig.tight_layout()
    fig.savefig(path, dpi=dpi)
    plt.close(fig)


def save_loss_figure(path, series: dict[str, np.ndarray], dpi: int = 110) -> None:
    """Loss curves on a log axis, one labeled line per series."""
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    for label, values in series.items():
        values = np.asarray(values, dtype=np.float64)
        positive = np.where(values > 0, values, np.nan)
        ax.semilogy(positive, label=label, linewidth=1.0)
    ax.set_xlabel("iteration")
    ax.set_ylabel("loss")
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=dpi)
    plt.close(fig)


def write_metrics_csv(path, rows: list[dict]) -> None:
    """Write dict rows as CSV with the union of keys as the header."""
    if not rows:
        Path(path).write_text("")
        return
    fields: list[str] = []
    for row in rows:
        for key in row:
            if key not in fields:
                fields.append(key)
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)
