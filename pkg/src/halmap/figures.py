"""Matplotlib rendering of maps, masks and analysis tables to image files.

Used by the CLI report stages; the library metrics themselves only emit
delimited data.  Figures are written PNG with stripped writer metadata so
reruns are byte-identical.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .linop import ImageGrid

_SAVE_OPTS = {"dpi": 110, "metadata": {"Software": None}}


def render_map(grid: ImageGrid, path: str | Path, title: str = "") -> None:
    """Render a complex map as real, imaginary and magnitude panels."""
    fig, axes = plt.subplots(1, 3, figsize=(9.6, 3.2), constrained_layout=True)
    panels = [
        ("real", grid.data.real),
        ("imag", grid.data.imag),
        ("magnitude", np.abs(grid.data)),
    ]
    for ax, (name, channel) in zip(axes, panels):
        im = ax.imshow(channel, cmap="viridis", interpolation="nearest")
        ax.set_title(name, fontsize=9)
        ax.set_xticks([])
        ax.set_yticks([])
        fig.colorbar(im, ax=ax, fraction=0.046)
    if title:
        fig.suptitle(title, fontsize=10)
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)


def render_mask(mask: ImageGrid, path: str | Path, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(4.0, 4.0), constrained_layout=True)
    ax.imshow(mask.data.real, cmap="gray", vmin=0, vmax=1, interpolation="nearest")
    ax.set_xticks([])
    ax.set_yticks([])
    if title:
        ax.set_title(title, fontsize=10)
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)


def render_report_card(report, path: str | Path) -> None:
    """One-figure summary of a hallucination report: map magnitudes and masks."""
    fig, axes = plt.subplots(2, 3, figsize=(9.6, 6.4), constrained_layout=True)
    panels = [
        ("error", np.abs(report.error_map.data), "viridis"),
        ("measurement HM", np.abs(report.meas_hm.data), "viridis"),
        ("measurement error", np.abs(report.meas_error_map.data), "viridis"),
        ("null HM", np.abs(report.null_hm.data), "viridis"),
        ("specific HM", report.shm_mask.data.real, "gray"),
        ("specific error", report.specific_error_mask.data.real, "gray"),
    ]
    for ax, (name, channel, cmap) in zip(axes.reshape(-1), panels):
        vmax = {"gray": 1}.get(cmap)
        im = ax.imshow(channel, cmap=cmap, vmin=0, vmax=vmax, interpolation="nearest")
        ax.set_title(name, fontsize=9)
        ax.set_xticks([])
        ax.set_yticks([])
        if cmap == "viridis":
            fig.colorbar(im, ax=ax, fraction=0.046)
    if report.image_id:
        fig.suptitle(report.image_id, fontsize=10)
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)


def render_centroid_scatter(
    series: dict[str, Sequence[tuple[float, float]]],
    path: str | Path,
    extent: tuple[int, int] | None = None,
    title: str = "",
) -> None:
    """Scatter of component centroids, one color per map kind."""
    fig, ax = plt.subplots(figsize=(4.8, 4.8), constrained_layout=True)
    colors = {"specific_hm": "tab:red", "specific_error": "tab:blue"}
    for name, points in sorted(series.items()):
        if not points:
            continue
        pts = np.asarray(points, dtype=np.float64)
        ax.scatter(
            pts[:, 1],
            pts[:, 0],
            s=14,
            alpha=0.75,
            label=name,
            color=colors.get(name),
        )
    if extent is not None:
        ax.set_xlim(0, extent[1])
        ax.set_ylim(extent[0], 0)
    else:
        ax.invert_yaxis()
    ax.set_xlabel("centroid column")
    ax.set_ylabel("centroid row")
    ax.legend(loc="upper right", fontsize=8)
    if title:
        ax.set_title(title, fontsize=10)
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)


def render_pdf(
    tables: dict[str, Sequence[tuple[float, float, float]]],
    path: str | Path,
    xlabel: str = "value",
    title: str = "",
) -> None:
    """Step plot of one or more empirical density tables."""
    fig, ax = plt.subplots(figsize=(5.6, 3.6), constrained_layout=True)
    for name, table in sorted(tables.items()):
        if not table:
            continue
        lefts = [row[0] for row in table] + [table[-1][1]]
        dens = [row[2] for row in table] + [table[-1][2]]
        ax.step(lefts, dens, where="post", label=name)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("density")
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title, fontsize=10)
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)
