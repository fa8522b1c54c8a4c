"""Temporal trajectories in projected space and their comparison.

A trajectory is the chronologically connected sequence of a case's projected
frame coordinates. Three analytics operate on them:

* convergence radius — mean distance of the last K points to their mean;
  small values indicate the case has settled into a steady state;
* a DTW-based dissimilarity normalized by local motion magnitudes;
* top-k retrieval of the most similar cases.

DTW conventions (pinned for testability):

* local motion ``m(a) = ||p(a) - p(a-1)||`` for a >= 2, with the forward
  difference ``m(1) = ||p(2) - p(1)||`` at the boundary;
* pair cost ``c(a, b) = ||p_i(a) - p_j(b)|| / max(m_i(a) + m_j(b), 1e-9)``;
* the dynamic program minimizes the summed normalized cost over monotone
  paths with steps (1,0), (0,1), (1,1) from (1,1) to (t_i, t_j);
* among equal-cost predecessors, backtracking prefers (1,1) over (1,0)
  over (0,1);
* returned path indices are 1-based time-step positions.
"""

from __future__ import annotations

import logging
import math
import threading
from dataclasses import dataclass

import numpy as np

from .dataset import DatasetHandle
from .errors import CaseSetMismatch, EmptySet, TrajectoryTooShort, UnknownCase
from .projection import ProjectionResult

MOTION_FLOOR = 1e-9  # denominator floor for stationary frames

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Trajectory:
    case_id: str
    channel: str
    points: tuple[tuple[int, float, float], ...]  # (t_index, x, y), t ascending

    def __len__(self) -> int:
        return len(self.points)

    def xy(self) -> np.ndarray:
        return np.array([(x, y) for _, x, y in self.points], dtype=np.float64)


@dataclass(frozen=True)
class ConvergenceStats:
    k_window: int                  # points actually averaged: min(K, length)
    tail_mean: tuple[float, float]
    radius: float


@dataclass(frozen=True)
class DissimilarityResult:
    case_a: str
    case_b: str
    value: float
    path: tuple[tuple[int, int], ...]  # 1-based, (1,1) .. (t_a, t_b)


def build_trajectory(projection: ProjectionResult, case_id: str,
                     channel: str | None = None) -> Trajectory:
    if case_id not in projection.spec.scope:
        raise UnknownCase(f"case {case_id!r} is not in the projection scope")
    points = projection.case_points(case_id)
    return Trajectory(case_id=case_id,
                      channel=channel or projection.spec.channel,
                      points=tuple(points))


def convergence_radius(traj: Trajectory, k: int = 5) -> ConvergenceStats:
    """Mean distance of the last min(k, length) points to their mean."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if len(traj) < 1:
        raise ValueError("trajectory is empty")
    window = min(k, len(traj))
    tail = traj.xy()[-window:]
    mean = tail.mean(axis=0)
    radius = float(np.sqrt(((tail - mean) ** 2).sum(axis=1)).mean())
    return ConvergenceStats(k_window=window,
                            tail_mean=(float(mean[0]), float(mean[1])),
                            radius=radius)


def mean_convergence_radius(trajectories: list[Trajectory], k: int = 5) -> float:
    if not trajectories:
        raise EmptySet("no trajectories")
    return float(np.mean([convergence_radius(t, k).radius for t in trajectories]))


def compare_embedding_variants(set_a: list[Trajectory], set_b: list[Trajectory],
                               k: int = 5) -> float:
    """Relative reduction in % of set A's mean radius against baseline set B.

    ``(mean_B - mean_A) / mean_B * 100`` where A is the focused variant and
    B the baseline. Both sets must cover the same case ids.
    """
    if not set_a or not set_b:
        raise EmptySet("both trajectory sets must be non-empty")
    ids_a = sorted(t.case_id for t in set_a)
    ids_b = sorted(t.case_id for t in set_b)
    if ids_a != ids_b:
        raise CaseSetMismatch(f"case sets differ: {ids_a} vs {ids_b}")
    mean_a = mean_convergence_radius(set_a, k)
    mean_b = mean_convergence_radius(set_b, k)
    if mean_b == 0.0:
        # identical degenerate sets: no reduction; a worse A has no finite value
        return 0.0 if mean_a == 0.0 else float("-inf")
    return (mean_b - mean_a) / mean_b * 100.0


def _motions(xy: np.ndarray) -> np.ndarray:
    """Per-vertex local motion with the forward-difference boundary at t=1."""
    d = np.diff(xy, axis=0)
    step = np.sqrt(d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1])
    return np.concatenate([step[:1], step])


def trajectory_dissimilarity(traj_a: Trajectory,
                             traj_b: Trajectory) -> DissimilarityResult:
    """Minimum summed motion-normalized cost over monotone DTW paths."""
    if len(traj_a) < 2 or len(traj_b) < 2:
        raise TrajectoryTooShort(
            f"need length >= 2, got {len(traj_a)} and {len(traj_b)}")
    pa, pb = traj_a.xy(), traj_b.xy()
    ma, mb = _motions(pa), _motions(pb)
    na, nb = len(pa), len(pb)

    dx = pa[:, 0:1] - pb[:, 0]
    dy = pa[:, 1:2] - pb[:, 1]
    den = np.maximum(ma[:, None] + mb[None, :], MOTION_FLOOR)
    cost = (np.sqrt(dx * dx + dy * dy) / den).tolist()

    acc = [[0.0] * nb for _ in range(na)]
    acc[0][0] = cost[0][0]
    for j in range(1, nb):
        acc[0][j] = cost[0][j] + acc[0][j - 1]
    for i in range(1, na):
        acc_i, acc_p, cost_i = acc[i], acc[i - 1], cost[i]
        acc_i[0] = cost_i[0] + acc_p[0]
        for j in range(1, nb):
            best = acc_p[j - 1]  # (1,1)
            if acc_p[j] < best:
                best = acc_p[j]  # (1,0)
            if acc_i[j - 1] < best:
                best = acc_i[j - 1]  # (0,1)
            acc_i[j] = cost_i[j] + best

    # backtrack; on ties prefer (1,1), then (1,0), then (0,1)
    path = [(na, nb)]
    i, j = na - 1, nb - 1
    while i > 0 or j > 0:
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        else:
            best = min(acc[i - 1][j - 1], acc[i - 1][j], acc[i][j - 1])
            if acc[i - 1][j - 1] == best:
                i, j = i - 1, j - 1
            elif acc[i - 1][j] == best:
                i -= 1
            else:
                j -= 1
        path.append((i + 1, j + 1))
    path.reverse()

    return DissimilarityResult(case_a=traj_a.case_id, case_b=traj_b.case_id,
                               value=float(acc[na - 1][nb - 1]),
                               path=tuple(path))


def path_cost(traj_a: Trajectory, traj_b: Trajectory,
              path: tuple[tuple[int, int], ...]) -> float:
    """Recompute the summed cost of an alignment path from coordinates."""
    pa, pb = traj_a.xy(), traj_b.xy()
    ma, mb = _motions(pa), _motions(pb)
    total = 0.0
    for a, b in path:
        dx = pa[a - 1, 0] - pb[b - 1, 0]
        dy = pa[a - 1, 1] - pb[b - 1, 1]
        total += math.sqrt(dx * dx + dy * dy) / max(ma[a - 1] + mb[b - 1], MOTION_FLOOR)
    return total


class DissimilarityCache:
    """Pairwise values keyed by (projection hash, min(case), max(case))."""

    def __init__(self):
        self._values: dict[tuple[str, str, str], float] = {}
        self._lock = threading.Lock()

    def get(self, projection_hash: str, case_a: str, case_b: str) -> float | None:
        lo, hi = min(case_a, case_b), max(case_a, case_b)
        return self._values.get((projection_hash, lo, hi))

    def put(self, projection_hash: str, case_a: str, case_b: str, value: float) -> None:
        lo, hi = min(case_a, case_b), max(case_a, case_b)
        with self._lock:
            self._values[(projection_hash, lo, hi)] = value


def top_k_similar(handle: DatasetHandle, projection: ProjectionResult,
                  case_id: str, k: int = 6,
                  cache: DissimilarityCache | None = None) -> list[tuple[str, float]]:
    """The k in-scope cases most similar to ``case_id``, ascending by value.

    Cases with fewer than 2 frames cannot be aligned and are skipped.
    Ties break by ascending case_id; the target itself is never returned.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not handle.has_case(case_id):
        raise UnknownCase(f"unknown case {case_id!r}")
    target = build_trajectory(projection, case_id)
    if len(target) < 2:
        raise TrajectoryTooShort(f"case {case_id!r} has fewer than 2 frames")
    proj_hash = projection.spec.spec_hash()
    scores: list[tuple[float, str]] = []
    for other_id in projection.spec.scope:
        if other_id == case_id:
            continue
        other = build_trajectory(projection, other_id)
        if len(other) < 2:
            log.warning("case %s has < 2 frames, excluded from similarity "
                        "candidates", other_id)
            continue
        value = cache.get(proj_hash, case_id, other_id) if cache else None
        if value is None:
            value = trajectory_dissimilarity(target, other).value
            if cache:
                cache.put(proj_hash, case_id, other_id, value)
        scores.append((value, other_id))
    scores.sort()
    return [(cid, value) for value, cid in scores[:k]]
