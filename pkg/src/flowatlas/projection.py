"""2D projection of frame embeddings.

The native method is a deterministic dense PCA; neighbor-graph layouts
(UMAP, t-SNE) are computed upstream and imported from delimited files. A
fixed sign convention makes PCA output reproducible across runs: within each
component, the entry of largest absolute value is made non-negative (ties
broken by lowest index).
"""

from __future__ import annotations

import csv
import json
import math
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import DatasetHandle
from .embedfile import read_embedding_file, write_embedding_file
from .errors import (
    DuplicateRow,
    FlowAtlasError,
    MissingFile,
    MissingFrameCoordinate,
    TooFewFrames,
    UnknownCase,
)
from .util import content_hash

FrameKey = tuple[str, int]  # (case_id, t_index)


class MalformedProjectionFile(FlowAtlasError):
    code = "malformed_projection_file"


@dataclass(frozen=True)
class ProjectionSpec:
    channel: str
    method: str                      # "pca" | "external"
    scope: tuple[str, ...]           # case ids included in the fit, ascending
    external_file: str | None = None
    method_params: dict | None = None  # provenance only, never executed

    def __post_init__(self):
        if self.method not in ("pca", "external"):
            raise ValueError(f"unknown projection method {self.method!r}")
        if not self.scope:
            raise ValueError("scope must be non-empty")
        if (self.external_file is not None) != (self.method == "external"):
            raise ValueError("external_file is required iff method == 'external'")
        object.__setattr__(self, "scope", tuple(sorted(self.scope)))

    def canonical(self) -> dict:
        return {
            "channel": self.channel,
            "method": self.method,
            "scope": list(self.scope),
            "external_file": self.external_file,
            "method_params": self.method_params or {},
        }

    def spec_hash(self) -> str:
        return content_hash(self.canonical())


@dataclass(frozen=True)
class PcaStats:
    eigenvalues: tuple[float, float]  # two leading, descending
    mean: np.ndarray
    components: np.ndarray            # (2, dim), unit-norm, mutually orthogonal
    degenerate_variance: bool = False


@dataclass(frozen=True)
class ProjectionResult:
    spec: ProjectionSpec
    coords: dict[FrameKey, tuple[float, float]]  # every in-scope frame, exactly once
    fit_stats: PcaStats | None = None

    def frame_keys(self) -> list[FrameKey]:
        return sorted(self.coords)

    def case_points(self, case_id: str) -> list[tuple[int, float, float]]:
        pts = [(t, xy[0], xy[1]) for (cid, t), xy in self.coords.items() if cid == case_id]
        pts.sort()
        return pts


def _scope_matrix(handle: DatasetHandle, channel: str,
                  scope: tuple[str, ...]) -> tuple[list[FrameKey], np.ndarray]:
    """Stack embeddings for all in-scope frames in ascending (case, t) order."""
    keys: list[FrameKey] = []
    blocks = []
    for case_id in sorted(scope):
        emb = handle.embedding(case_id, channel)  # raises UnknownCase
        blocks.append(np.asarray(emb.rows, dtype=np.float64))
        keys.extend((case_id, t) for t in range(emb.n_frames))
    return keys, np.vstack(blocks)


@dataclass(frozen=True)
class PcaFit:
    coords: np.ndarray                # (n, 2)
    eigenvalues: tuple[float, float]  # descending
    mean: np.ndarray
    components: np.ndarray            # (2, dim)
    degenerate: bool


def pca_2d(X: np.ndarray) -> PcaFit:
    """Project rows of X onto the two leading principal components.

    Covariance uses the n-1 denominator; eigenpairs come from a dense
    symmetric eigendecomposition, ordered by descending eigenvalue, with the
    sign convention applied. All-identical input is reported as a degenerate
    fit (zero coords, zero eigenvalues) instead of failing.
    """
    X = np.asarray(X, dtype=np.float64)
    n, dim = X.shape
    if dim < 2:
        raise ValueError(f"embedding dim must be >= 2, got {dim}")
    if n < 3:
        raise TooFewFrames(f"PCA needs at least 3 frames, got {n}")
    mean = X.mean(axis=0)
    if np.all(X == X[0]):
        return PcaFit(coords=np.zeros((n, 2)), eigenvalues=(0.0, 0.0), mean=mean,
                      components=np.zeros((2, dim)), degenerate=True)
    centered = X - mean
    cov = (centered.T @ centered) / (n - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    components = eigvecs[:, ::-1][:, :2].T.copy()  # (2, dim), descending eigenvalue
    eigenvalues = (float(eigvals[-1]), float(eigvals[-2]))
    for comp in components:
        pivot = int(np.argmax(np.abs(comp)))  # ties break to lowest index
        if comp[pivot] < 0:
            comp *= -1.0
    return PcaFit(coords=centered @ components.T, eigenvalues=eigenvalues,
                  mean=mean, components=components, degenerate=False)


def fit_pca_2d(handle: DatasetHandle, channel: str,
               scope: list[str] | tuple[str, ...]) -> ProjectionResult:
    spec = ProjectionSpec(channel=channel, method="pca", scope=tuple(scope))
    keys, X = _scope_matrix(handle, channel, spec.scope)
    fit = pca_2d(X)
    coord_map = {key: (float(x), float(y)) for key, (x, y) in zip(keys, fit.coords)}
    stats = PcaStats(eigenvalues=fit.eigenvalues, mean=fit.mean,
                     components=fit.components,
                     degenerate_variance=fit.degenerate)
    return ProjectionResult(spec=spec, coords=coord_map, fit_stats=stats)


def import_external_projection(handle: DatasetHandle, channel: str,
                               scope: list[str] | tuple[str, ...],
                               file: str | Path,
                               method_params: dict | None = None) -> ProjectionResult:
    """Import 2D coordinates computed upstream (e.g. a UMAP layout).

    The file must cover every frame of every in-scope case exactly once;
    partial coverage and extraneous rows are errors, never a silent subset.
    """
    path = Path(file)
    if not path.is_file():
        raise MissingFile(f"projection file not found: {path}")
    spec = ProjectionSpec(channel=channel, method="external", scope=tuple(scope),
                          external_file=str(file), method_params=method_params)
    expected: set[FrameKey] = set()
    for case_id in spec.scope:
        expected.update((case_id, t) for t in range(handle.n_frames(case_id, channel)))

    coord_map: dict[FrameKey, tuple[float, float]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header] != ["case_id", "t_index", "x", "y"]:
            raise MalformedProjectionFile(f"{path}: expected header case_id,t_index,x,y")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise MalformedProjectionFile(f"{path}:{lineno}: expected 4 fields")
            case_id = row[0].strip()
            try:
                key = (case_id, int(row[1]))
                xy = (float(row[2]), float(row[3]))
            except ValueError as exc:
                raise MalformedProjectionFile(f"{path}:{lineno}: {exc}") from exc
            if not (math.isfinite(xy[0]) and math.isfinite(xy[1])):
                raise MalformedProjectionFile(f"{path}:{lineno}: non-finite coordinate")
            if key not in expected:
                raise UnknownCase(
                    f"{path}:{lineno}: row for {key} is not an in-scope frame")
            if key in coord_map:
                raise DuplicateRow(f"{path}:{lineno}: duplicate row for {key}")
            coord_map[key] = xy
    missing = expected - set(coord_map)
    if missing:
        case_id, t = min(missing)
        raise MissingFrameCoordinate(
            f"{path}: no coordinate for frame ({case_id}, {t}) "
            f"({len(missing)} missing in total)")
    return ProjectionResult(spec=spec, coords=dict(sorted(coord_map.items())))


def export_projection_csv(result: ProjectionResult, path: str | Path) -> None:
    """Write coords in the external-projection format (round-trips exactly)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["case_id", "t_index", "x", "y"])
        for (case_id, t), (x, y) in sorted(result.coords.items()):
            writer.writerow([case_id, t, repr(x), repr(y)])


# -- cache -------------------------------------------------------------------

class ProjectionCache:
    """Disk + memory cache keyed by the canonical spec hash.

    Disk round-trips quantize coords to float32 (the embedding binary
    format); in-memory entries keep full precision for the process lifetime.
    Insertion is serialized; reads are lock-free on the memory map.
    """

    def __init__(self, cache_dir: str | Path | None):
        self.cache_dir = Path(cache_dir) if cache_dir else None
        self._memory: dict[str, ProjectionResult] = {}
        self._lock = threading.Lock()

    def get(self, spec_hash: str) -> ProjectionResult | None:
        result = self._memory.get(spec_hash)
        if result is not None:
            return result
        return self._load_disk(spec_hash)

    def put(self, result: ProjectionResult) -> str:
        spec_hash = result.spec.spec_hash()
        with self._lock:
            self._memory[spec_hash] = result
            if self.cache_dir is not None:
                self._save_disk(spec_hash, result)
        return spec_hash

    def _entry_dir(self, spec_hash: str) -> Path:
        return self.cache_dir / "projections" / spec_hash

    def _save_disk(self, spec_hash: str, result: ProjectionResult) -> None:
        entry = self._entry_dir(spec_hash)
        entry.mkdir(parents=True, exist_ok=True)
        keys = result.frame_keys()
        coords = np.array([result.coords[k] for k in keys], dtype=np.float64)
        write_embedding_file(coords, entry / "coords.tfv")
        sidecar = {
            "spec": result.spec.canonical(),
            "frames": [[c, t] for c, t in keys],
            "fit_stats": None,
        }
        if result.fit_stats is not None:
            sidecar["fit_stats"] = {
                "eigenvalues": list(result.fit_stats.eigenvalues),
                "mean": result.fit_stats.mean.tolist(),
                "components": result.fit_stats.components.tolist(),
                "degenerate_variance": result.fit_stats.degenerate_variance,
            }
        (entry / "spec.json").write_text(json.dumps(sidecar, indent=2) + "\n")

    def _load_disk(self, spec_hash: str) -> ProjectionResult | None:
        if self.cache_dir is None:
            return None
        entry = self._entry_dir(spec_hash)
        if not (entry / "spec.json").is_file():
            return None
        sidecar = json.loads((entry / "spec.json").read_text())
        spec = ProjectionSpec(
            channel=sidecar["spec"]["channel"],
            method=sidecar["spec"]["method"],
            scope=tuple(sidecar["spec"]["scope"]),
            external_file=sidecar["spec"]["external_file"],
            method_params=sidecar["spec"]["method_params"] or None,
        )
        coords = read_embedding_file(entry / "coords.tfv")
        coord_map = {(c, int(t)): (float(x), float(y))
                     for (c, t), (x, y) in zip(sidecar["frames"], coords)}
        stats = None
        if sidecar.get("fit_stats"):
            fs = sidecar["fit_stats"]
            stats = PcaStats(eigenvalues=tuple(fs["eigenvalues"]),
                             mean=np.array(fs["mean"]),
                             components=np.array(fs["components"]),
                             degenerate_variance=fs["degenerate_variance"])
        result = ProjectionResult(spec=spec, coords=coord_map, fit_stats=stats)
        with self._lock:
            self._memory.setdefault(spec_hash, result)
        return self._memory[spec_hash]
