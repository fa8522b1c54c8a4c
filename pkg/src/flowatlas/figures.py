"""Matplotlib rendering for the batch CLI.

Each report command writes a figure next to its delimited output so results
can be eyeballed without the interactive frontend. Noise is always gray;
cluster colors come from a fixed categorical palette keyed by cluster id, so
the same clustering renders identically across runs.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .clustering import NOISE, ClusterModel
from .projection import ProjectionResult

NOISE_COLOR = "#9e9e9e"
PALETTE = plt.get_cmap("tab20").colors


def cluster_color(cluster_id: int):
    if cluster_id == NOISE:
        return NOISE_COLOR
    return PALETTE[cluster_id % len(PALETTE)]


def save_similarity_heatmap(case_ids: list[str], matrix: np.ndarray,
                            path: str | Path) -> Path:
    path = Path(path)
    n = len(case_ids)
    fig, ax = plt.subplots(figsize=(max(4.0, 0.45 * n + 2), max(3.5, 0.45 * n + 1.5)))
    im = ax.imshow(matrix, cmap="viridis")
    ax.set_xticks(range(n), case_ids, rotation=90, fontsize=7)
    ax.set_yticks(range(n), case_ids, fontsize=7)
    ax.set_title("Trajectory dissimilarity (DTW, motion-normalized)")
    fig.colorbar(im, ax=ax, shrink=0.85)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_convergence_chart(radii: dict[str, float], path: str | Path,
                           k: int) -> Path:
    path = Path(path)
    ids = list(radii)
    values = [radii[c] for c in ids]
    fig, ax = plt.subplots(figsize=(6.0, max(2.5, 0.3 * len(ids) + 1.2)))
    ax.barh(range(len(ids)), values, color="#4878cf")
    ax.set_yticks(range(len(ids)), ids, fontsize=8)
    ax.invert_yaxis()
    ax.set_xlabel(f"convergence radius (last {k} points)")
    ax.set_title("Per-case trajectory convergence")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_cluster_scatter(projection: ProjectionResult, model: ClusterModel,
                         path: str | Path, highlight_case: str | None = None) -> Path:
    path = Path(path)
    keys = projection.frame_keys()
    xy = np.array([projection.coords[k] for k in keys])
    colors = [cluster_color(model.labels[k]) for k in keys]
    fig, ax = plt.subplots(figsize=(7, 6))
    ax.scatter(xy[:, 0], xy[:, 1], c=colors, s=18, linewidths=0, alpha=0.8)
    if highlight_case is not None:
        pts = projection.case_points(highlight_case)
        if pts:
            arr = np.array([(x, y) for _, x, y in pts])
            ax.plot(arr[:, 0], arr[:, 1], "-", color="black", lw=1.0, alpha=0.7)
            ax.scatter(arr[:, 0], arr[:, 1], s=26, facecolors="none",
                       edgecolors="black", linewidths=0.8)
    if model.centroid_coords:
        cx = [v[0] for v in model.centroid_coords.values()]
        cy = [v[1] for v in model.centroid_coords.values()]
        ax.scatter(cx, cy, marker="D", s=70, facecolors="white",
                   edgecolors="black", linewidths=1.2, zorder=5, label="centroids")
        ax.legend(loc="best", fontsize=8)
    ax.set_xlabel("latent x")
    ax.set_ylabel("latent y")
    title = f"{projection.spec.channel} / {projection.spec.method}"
    if highlight_case:
        title += f" / {highlight_case}"
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
