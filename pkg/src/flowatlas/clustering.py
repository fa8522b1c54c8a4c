"""Density clustering of projected frames.

DBSCAN over the 2D projected coordinates with the two classic ambiguities
pinned down for reproducibility:

* the eps-neighborhood is a closed ball (``distance <= eps``) and includes
  the point itself when counting against ``min_samples``;
* points are scanned in ascending (case_id, t_index) order, cluster ids are
  assigned in order of first discovery, and a border point reachable from
  several clusters joins the one whose expansion reaches it first under that
  scan order.

With those rules the labeling is a pure function of the input, so identical
inputs give byte-identical models.
"""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .projection import FrameKey, ProjectionResult
from .util import content_hash

NOISE = -1
_UNVISITED = -2


@dataclass(frozen=True)
class ClusteringParams:
    eps: float
    min_samples: int
    projection_hash: str

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"eps must be > 0, got {self.eps}")
        if self.min_samples < 1:
            raise ValueError(f"min_samples must be >= 1, got {self.min_samples}")

    def model_hash(self) -> str:
        return content_hash({"projection": self.projection_hash,
                             "eps": self.eps, "min_samples": self.min_samples})


@dataclass(frozen=True)
class ClusterModel:
    params: ClusteringParams
    labels: dict[FrameKey, int]                 # -1 = noise, 0..k-1 = clusters
    centroids: dict[int, FrameKey] = field(default_factory=dict)
    centroid_coords: dict[int, tuple[float, float]] = field(default_factory=dict)

    @property
    def n_clusters(self) -> int:
        return max(self.labels.values(), default=NOISE) + 1

    def members(self, cluster_id: int) -> list[FrameKey]:
        return [k for k, lab in self.labels.items() if lab == cluster_id]


def dbscan(projection: ProjectionResult, eps: float, min_samples: int) -> ClusterModel:
    """Label every projected frame; centroids are filled by select_centroids."""
    params = ClusteringParams(eps=eps, min_samples=min_samples,
                              projection_hash=projection.spec.spec_hash())
    keys = projection.frame_keys()
    if not keys:
        raise ValueError("projection is empty")
    X = np.array([projection.coords[k] for k in keys], dtype=np.float64)
    n = len(keys)
    eps2 = eps * eps
    labels = np.full(n, _UNVISITED, dtype=np.int64)

    def neighborhood(i: int) -> np.ndarray:
        d2 = (X[:, 0] - X[i, 0]) ** 2 + (X[:, 1] - X[i, 1]) ** 2
        return np.nonzero(d2 <= eps2)[0]  # ascending scan order, includes i

    cluster_id = 0
    for i in range(n):
        if labels[i] != _UNVISITED:
            continue
        neigh = neighborhood(i)
        if len(neigh) < min_samples:
            labels[i] = NOISE  # may be re-claimed as a border point later
            continue
        labels[i] = cluster_id
        queue = deque(int(j) for j in neigh if j != i)
        while queue:
            j = queue.popleft()
            if labels[j] == NOISE:
                labels[j] = cluster_id  # border point, claimed by first reach
                continue
            if labels[j] != _UNVISITED:
                continue
            labels[j] = cluster_id
            nj = neighborhood(j)
            if len(nj) >= min_samples:
                queue.extend(int(k) for k in nj
                             if labels[k] == _UNVISITED or labels[k] == NOISE)
        cluster_id += 1

    return ClusterModel(params=params,
                        labels={k: int(lab) for k, lab in zip(keys, labels)})


def select_centroids(model: ClusterModel, projection: ProjectionResult) -> ClusterModel:
    """Pick each cluster's representative frame.

    The representative is the member closest (Euclidean, in projected space)
    to the mean of member coordinates; ties break to the lowest
    (case_id, t_index). Noise points are excluded entirely.
    """
    by_cluster: dict[int, list[FrameKey]] = {}
    for key in sorted(model.labels):
        lab = model.labels[key]
        if lab != NOISE:
            by_cluster.setdefault(lab, []).append(key)

    centroids: dict[int, FrameKey] = {}
    centroid_coords: dict[int, tuple[float, float]] = {}
    for cluster_id in sorted(by_cluster):
        members = by_cluster[cluster_id]
        pts = np.array([projection.coords[k] for k in members], dtype=np.float64)
        mean = pts.mean(axis=0)
        best_key = None
        best_d2 = None
        for key, (x, y) in zip(members, pts):  # members ascending: ties keep first
            d2 = (x - mean[0]) ** 2 + (y - mean[1]) ** 2
            if best_d2 is None or d2 < best_d2:
                best_d2 = d2
                best_key = key
        centroids[cluster_id] = best_key
        centroid_coords[cluster_id] = projection.coords[best_key]

    return ClusterModel(params=model.params, labels=dict(model.labels),
                        centroids=centroids, centroid_coords=centroid_coords)


def cluster_projection(projection: ProjectionResult, eps: float,
                       min_samples: int) -> ClusterModel:
    """dbscan + select_centroids in one step."""
    return select_centroids(dbscan(projection, eps, min_samples), projection)


def export_labels_csv(model: ClusterModel, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["case_id", "t_index", "label"])
        for (case_id, t), label in sorted(model.labels.items()):
            writer.writerow([case_id, t, label])


def export_centroids_csv(model: ClusterModel, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cluster_id", "case_id", "t_index", "x", "y"])
        for cluster_id in sorted(model.centroids):
            case_id, t = model.centroids[cluster_id]
            x, y = model.centroid_coords[cluster_id]
            writer.writerow([cluster_id, case_id, t, repr(x), repr(y)])
