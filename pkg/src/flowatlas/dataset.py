"""Domain data model and dataset loading.

A dataset is described by a JSON manifest (see ``README.md`` for the schema)
plus one binary embedding file per (case, channel). All paths in the manifest
are relative to the manifest's directory. The returned
:class:`DatasetHandle` is immutable and safe to share across threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .embedfile import read_embedding_file
from .errors import (
    InvalidRange,
    MalformedManifest,
    MissingFile,
    NonFiniteEmbedding,
    ShapeMismatch,
)

# Documented dataset convention (not enforced): static pressure in
# [0.8, 2.1] MPa, static temperature in [565, 830] K, water vapor
# fraction in [7.8, 14] %.
P_MPA_RANGE = (0.8, 2.1)
T_K_RANGE = (565.0, 830.0)
H2O_PCT_RANGE = (7.8, 14.0)

Interval = tuple[float | None, float | None]


@dataclass(frozen=True)
class CaseParams:
    """Initial-condition parameters of one simulation case."""

    p_static: float  # static pressure, MPa
    t_static: float  # static temperature, K
    h2o: float       # water vapor fraction, %

    def __post_init__(self):
        for name, value in (("p_static", self.p_static),
                            ("t_static", self.t_static),
                            ("h2o", self.h2o)):
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise MalformedManifest(f"{name} must be finite and > 0, got {value!r}")


@dataclass(frozen=True)
class FrameRef:
    case_id: str
    channel: str
    t_index: int
    time_ms: float
    image_path: str  # relative to the manifest directory


@dataclass(frozen=True)
class EmbeddingMatrix:
    case_id: str
    channel: str
    dim: int
    rows: np.ndarray  # (n_frames, dim) float32, row t = frame with t_index t

    @property
    def n_frames(self) -> int:
        return self.rows.shape[0]


@dataclass(frozen=True)
class ChannelData:
    frames: tuple[FrameRef, ...]
    embedding: EmbeddingMatrix


@dataclass(frozen=True)
class CaseRecord:
    case_id: str
    params: CaseParams
    channels: dict[str, ChannelData] = field(default_factory=dict)


class DatasetHandle:
    """Read-only view over a loaded dataset."""

    def __init__(self, name: str, root: Path, channels: tuple[str, ...],
                 cases: dict[str, CaseRecord], provenance: str | None = None):
        self.name = name
        self.root = root
        self.channels = channels
        self._cases = dict(sorted(cases.items()))
        self.embedding_provenance = provenance

    def case_ids(self) -> list[str]:
        return list(self._cases)

    @property
    def n_cases(self) -> int:
        return len(self._cases)

    def case(self, case_id: str) -> CaseRecord:
        try:
            return self._cases[case_id]
        except KeyError:
            from .errors import UnknownCase
            raise UnknownCase(f"unknown case {case_id!r}") from None

    def has_case(self, case_id: str) -> bool:
        return case_id in self._cases

    def frames(self, case_id: str, channel: str) -> tuple[FrameRef, ...]:
        return self._channel(case_id, channel).frames

    def embedding(self, case_id: str, channel: str) -> EmbeddingMatrix:
        return self._channel(case_id, channel).embedding

    def image_path(self, case_id: str, channel: str, t_index: int) -> Path:
        frames = self.frames(case_id, channel)
        if not 0 <= t_index < len(frames):
            from .errors import UnknownCase
            raise UnknownCase(f"case {case_id!r} channel {channel!r} has no frame {t_index}")
        return self.root / frames[t_index].image_path

    def n_frames(self, case_id: str, channel: str) -> int:
        return len(self._channel(case_id, channel).frames)

    def total_frames(self, channel: str | None = None) -> int:
        total = 0
        for rec in self._cases.values():
            for ch, data in rec.channels.items():
                if channel is None or ch == channel:
                    total += len(data.frames)
        return total

    def _channel(self, case_id: str, channel: str) -> ChannelData:
        rec = self.case(case_id)
        try:
            return rec.channels[channel]
        except KeyError:
            from .errors import UnknownCase
            raise UnknownCase(f"case {case_id!r} has no channel {channel!r}") from None


def load_dataset(manifest_path: str | Path) -> DatasetHandle:
    """Load and validate a dataset manifest plus all referenced embedding files."""
    manifest_path = Path(manifest_path)
    if not manifest_path.is_file():
        raise MissingFile(f"manifest not found: {manifest_path}")
    try:
        doc = json.loads(manifest_path.read_text())
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedManifest(f"{manifest_path}: {exc}") from exc

    root = manifest_path.parent
    try:
        name = doc["dataset_name"]
        channel_list = tuple(doc["channels"])
        case_docs = doc["cases"]
    except (KeyError, TypeError) as exc:
        raise MalformedManifest(f"{manifest_path}: missing required key {exc}") from exc
    if not isinstance(case_docs, list):
        raise MalformedManifest(f"{manifest_path}: 'cases' must be a list")

    cases: dict[str, CaseRecord] = {}
    dims: dict[str, int] = {}  # channel -> embedding dim, identical across cases
    for cdoc in case_docs:
        case_id, record = _load_case(cdoc, root, channel_list, dims)
        if case_id in cases:
            raise MalformedManifest(f"duplicate case_id {case_id!r}")
        cases[case_id] = record

    return DatasetHandle(name, root, channel_list, cases,
                         provenance=doc.get("embedding_provenance"))


def _load_case(cdoc: dict, root: Path, channel_list: tuple[str, ...],
               dims: dict[str, int]) -> tuple[str, CaseRecord]:
    try:
        case_id = cdoc["case_id"]
        pdoc = cdoc["params"]
        params = CaseParams(p_static=float(pdoc["P_MPa"]),
                            t_static=float(pdoc["T_K"]),
                            h2o=float(pdoc["H2O_pct"]))
        channel_docs = cdoc["channels"]
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedManifest(f"case entry {cdoc.get('case_id', '?')!r}: {exc}") from exc

    channels: dict[str, ChannelData] = {}
    for channel, chdoc in channel_docs.items():
        if channel not in channel_list:
            raise MalformedManifest(
                f"case {case_id!r} uses undeclared channel {channel!r}")
        frames = _load_frames(case_id, channel, chdoc)
        emb_rel = chdoc.get("embedding_file")
        if not emb_rel:
            raise MalformedManifest(f"case {case_id!r}/{channel}: missing embedding_file")
        emb_path = root / emb_rel
        if not emb_path.is_file():
            raise MissingFile(f"embedding file not found: {emb_path}")
        rows = read_embedding_file(emb_path)
        if rows.shape[0] != len(frames):
            raise ShapeMismatch(
                f"case {case_id!r}/{channel}: embedding has {rows.shape[0]} rows "
                f"for {len(frames)} frames")
        dim = rows.shape[1]
        if dims.setdefault(channel, dim) != dim:
            raise ShapeMismatch(
                f"case {case_id!r}/{channel}: dim {dim} differs from {dims[channel]}")
        if not np.all(np.isfinite(rows)):
            raise NonFiniteEmbedding(f"case {case_id!r}/{channel}: non-finite entries")
        rows.setflags(write=False)
        channels[channel] = ChannelData(
            frames=frames,
            embedding=EmbeddingMatrix(case_id, channel, dim, rows))
    return case_id, CaseRecord(case_id=case_id, params=params, channels=channels)


def _load_frames(case_id: str, channel: str, chdoc: dict) -> tuple[FrameRef, ...]:
    frames = []
    try:
        frame_docs = chdoc["frames"]
    except (KeyError, TypeError) as exc:
        raise MalformedManifest(f"case {case_id!r}/{channel}: {exc}") from exc
    for fdoc in frame_docs:
        try:
            frames.append(FrameRef(case_id=case_id, channel=channel,
                                   t_index=int(fdoc["t_index"]),
                                   time_ms=float(fdoc["time_ms"]),
                                   image_path=str(fdoc["image"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedManifest(f"case {case_id!r}/{channel} frame: {exc}") from exc
    for t, ref in enumerate(frames):
        if ref.t_index != t:
            raise MalformedManifest(
                f"case {case_id!r}/{channel}: t_index values must be 0..n-1 "
                f"contiguous, got {ref.t_index} at position {t}")
    times = [f.time_ms for f in frames]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise MalformedManifest(
            f"case {case_id!r}/{channel}: time_ms must be strictly increasing")
    return tuple(frames)


def _check_interval(name: str, rng: Interval) -> Interval:
    lo, hi = rng
    if lo is not None and hi is not None and lo > hi:
        raise InvalidRange(f"{name}: min {lo} > max {hi}")
    return lo, hi


def _inside(value: float, rng: Interval) -> bool:
    lo, hi = rng
    return (lo is None or value >= lo) and (hi is None or value <= hi)


def filter_cases(handle: DatasetHandle,
                 p_range: Interval = (None, None),
                 t_range: Interval = (None, None),
                 h2o_range: Interval = (None, None)) -> list[str]:
    """Case ids whose parameters fall inside all three closed intervals.

    Interval ends may be ``None`` (unbounded). Result is ascending case_id.
    """
    p_range = _check_interval("p_range", p_range)
    t_range = _check_interval("t_range", t_range)
    h2o_range = _check_interval("h2o_range", h2o_range)
    out = []
    for case_id in handle.case_ids():
        params = handle.case(case_id).params
        if (_inside(params.p_static, p_range)
                and _inside(params.t_static, t_range)
                and _inside(params.h2o, h2o_range)):
            out.append(case_id)
    return out
