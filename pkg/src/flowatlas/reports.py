"""Expert-grounded report generation.

Frames are described by a vision-language model conditioned on the nearest
annotated cluster centroids: the prompt interleaves each centroid's image
with its expert annotation (ascending latent distance), then presents the
target frame. Case summaries aggregate per-frame reports plus a subsampled
strip of the case's images. Every generated report records the exact context
used, so the prompt can be re-assembled byte-for-byte.
"""

from __future__ import annotations

import base64
import math
import mimetypes
from dataclasses import dataclass

from .clustering import NOISE, ClusterModel
from .dataset import DatasetHandle
from .errors import NoAnnotatedCentroids, UnknownCase, UnknownCluster
from .projection import ProjectionResult
from .stores import (
    AnnotationRecord,
    AnnotationStore,
    ContextRef,
    FrameKey,
    Report,
    ReportStore,
    _utcnow,
)
from .vlm import VlmClient

TEMPLATE_VERSION = "v1"
SYSTEM_PROMPT = ("You are an expert in scramjet combustion analysis. Describe "
                 "flow-field frames using the terminology of the provided "
                 "expert-annotated examples. Be concise and physically precise.")
FRAME_INSTRUCTION = ("Describe this frame's combustion state, referencing surge "
                     "position, flame structure, and combustion mode.")
CASE_INSTRUCTION = ("Summarize this case's combustion evolution across the "
                    "sequence: ignition, mode transitions, stabilization or "
                    "failure, and the final combustion mode.")
DEFAULT_CONTEXT_K = 3
MAX_CASE_IMAGES = 12


def save_annotation(store: AnnotationStore, model: ClusterModel, cluster_id: int,
                    text: str, author: str) -> AnnotationRecord:
    """Persist expert text for a cluster centroid (noise is not annotatable)."""
    if cluster_id == NOISE:
        raise UnknownCluster("noise (-1) has no centroid and cannot be annotated",
                             is_noise=True)
    if cluster_id not in model.centroids:
        raise UnknownCluster(f"no cluster {cluster_id} in this clustering")
    key = (model.params.model_hash(), cluster_id)
    return store.save(key, model.centroids[cluster_id], text, author)


def nearest_annotated_centroids(
        model: ClusterModel, annotations: dict[int, AnnotationRecord],
        frame_coord: tuple[float, float], k: int,
) -> list[tuple[int, FrameKey, AnnotationRecord, float]]:
    """The k annotated centroids nearest to ``frame_coord``, ascending.

    Ties break by ascending cluster id; fewer than k are returned when fewer
    annotated centroids exist.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not annotations:
        raise NoAnnotatedCentroids(
            "no annotated centroids in this clustering; annotate some first")
    ranked = []
    for cluster_id in sorted(annotations):
        if cluster_id not in model.centroid_coords:
            continue
        cx, cy = model.centroid_coords[cluster_id]
        dist = math.sqrt((cx - frame_coord[0]) ** 2 + (cy - frame_coord[1]) ** 2)
        ranked.append((dist, cluster_id))
    if not ranked:
        raise NoAnnotatedCentroids(
            "annotations exist but none match this clustering's centroids")
    ranked.sort()
    return [(cid, model.centroids[cid], annotations[cid], dist)
            for dist, cid in ranked[:k]]


def detect_transitions(case_id: str, model: ClusterModel) -> list[tuple[int, int, int]]:
    """Consecutive-frame label changes as (t_index, from, to); noise included."""
    labels = sorted(((t, lab) for (cid, t), lab in model.labels.items()
                     if cid == case_id))
    out = []
    for (_, prev), (t, cur) in zip(labels, labels[1:]):
        if prev != cur:
            out.append((t, prev, cur))
    return out


def subsample_indices(n: int, n_max: int = MAX_CASE_IMAGES) -> list[int]:
    """Uniform stride over 0..n-1, at most n_max indices, first and last kept."""
    if n <= n_max:
        return list(range(n))
    stride = (n - 1) / (n_max - 1)
    return [int(i * stride + 0.5) for i in range(n_max)]


def _image_part(image_bytes: bytes, mime: str) -> dict:
    b64 = base64.b64encode(image_bytes).decode("ascii")
    return {"type": "image_url", "image_url": {"url": f"data:{mime};base64,{b64}"}}


def _text_part(text: str) -> dict:
    return {"type": "text", "text": text}


def _format_distance(distance: float) -> str:
    return f"{distance:.6f}"


@dataclass
class _Context:
    cluster_id: int
    centroid: FrameKey
    text: str
    distance: float
    image: bytes
    mime: str


class ReportEngine:
    """Binds dataset, stores and VLM client into the report operations."""

    def __init__(self, handle: DatasetHandle, annotations: AnnotationStore,
                 reports: ReportStore, vlm: VlmClient):
        self.handle = handle
        self.annotations = annotations
        self.reports = reports
        self.vlm = vlm

    # -- prompt assembly ------------------------------------------------------

    def _read_image(self, channel: str, key: FrameKey) -> tuple[bytes, str]:
        path = self.handle.image_path(key[0], channel, key[1])
        if not path.is_file():
            raise UnknownCase(f"image not found for frame {key}: {path}")
        mime = mimetypes.guess_type(path.name)[0] or "image/png"
        return path.read_bytes(), mime

    def _gather_contexts(self, projection: ProjectionResult, model: ClusterModel,
                         coord: tuple[float, float], k: int) -> list[_Context]:
        annotated = self.annotations.annotated_clusters(model.params.model_hash())
        nearest = nearest_annotated_centroids(model, annotated, coord, k)
        channel = projection.spec.channel
        contexts = []
        for cluster_id, centroid, record, distance in nearest:
            image, mime = self._read_image(channel, centroid)
            contexts.append(_Context(cluster_id=cluster_id, centroid=centroid,
                                     text=record.text, distance=distance,
                                     image=image, mime=mime))
        return contexts

    @staticmethod
    def _context_parts(contexts: list[_Context]) -> list[dict]:
        parts = []
        for i, ctx in enumerate(contexts, start=1):
            parts.append(_image_part(ctx.image, ctx.mime))
            parts.append(_text_part(
                f"Expert annotation {i} (latent distance "
                f"{_format_distance(ctx.distance)}): {ctx.text}"))
        return parts

    def build_frame_prompt(self, contexts: list[_Context],
                           target_images: list[tuple[bytes, str]]) -> list[dict]:
        parts = self._context_parts(contexts)
        for image, mime in target_images:
            parts.append(_image_part(image, mime))
        parts.append(_text_part(FRAME_INSTRUCTION))
        return [{"role": "system", "content": SYSTEM_PROMPT},
                {"role": "user", "content": parts}]

    # -- report generation ----------------------------------------------------

    def _frame_coord(self, projection: ProjectionResult,
                     key: FrameKey) -> tuple[float, float]:
        try:
            return projection.coords[key]
        except KeyError:
            raise UnknownCase(f"frame {key} is not covered by this projection") from None

    def generate_frame_report(self, projection: ProjectionResult,
                              model: ClusterModel, case_id: str, t_index: int,
                              k: int = DEFAULT_CONTEXT_K) -> Report:
        key = (case_id, t_index)
        coord = self._frame_coord(projection, key)
        contexts = self._gather_contexts(projection, model, coord, k)
        target = self._read_image(projection.spec.channel, key)
        messages = self.build_frame_prompt(contexts, [target])
        text = self.vlm.chat(messages)
        report = Report(
            kind="frame", target=key, text=text,
            context_refs=tuple(ContextRef(c.cluster_id, c.centroid, c.distance)
                               for c in contexts),
            model_id=self.vlm.model_id, generated_at=_utcnow(),
            clustering_id=model.params.model_hash(),
            template_version=TEMPLATE_VERSION)
        self.reports.add(report)
        return report

    def generate_transition_report(self, projection: ProjectionResult,
                                   model: ClusterModel, case_id: str, t_index: int,
                                   k: int = DEFAULT_CONTEXT_K) -> Report:
        """Frame template applied to both frames bracketing a label change.

        Context centroids are ranked by distance to the midpoint of the two
        frame coordinates.
        """
        if t_index < 1:
            raise UnknownCase("a transition needs a preceding frame")
        before, after = (case_id, t_index - 1), (case_id, t_index)
        xb, yb = self._frame_coord(projection, before)
        xa, ya = self._frame_coord(projection, after)
        midpoint = ((xb + xa) / 2.0, (yb + ya) / 2.0)
        contexts = self._gather_contexts(projection, model, midpoint, k)
        channel = projection.spec.channel
        targets = [self._read_image(channel, before), self._read_image(channel, after)]
        messages = self.build_frame_prompt(contexts, targets)
        text = self.vlm.chat(messages)
        report = Report(
            kind="transition", target=after, text=text,
            context_refs=tuple(ContextRef(c.cluster_id, c.centroid, c.distance)
                               for c in contexts),
            model_id=self.vlm.model_id, generated_at=_utcnow(),
            clustering_id=model.params.model_hash(),
            template_version=TEMPLATE_VERSION)
        self.reports.add(report)
        return report

    def build_case_prompt(self, projection: ProjectionResult, case_id: str,
                          frame_reports: list[Report]) -> list[dict]:
        channel = projection.spec.channel
        n = self.handle.n_frames(case_id, channel)
        parts = []
        for t in subsample_indices(n):
            image, mime = self._read_image(channel, (case_id, t))
            parts.append(_image_part(image, mime))
        for report in frame_reports:
            parts.append(_text_part(f"Frame {report.target[1]} report: {report.text}"))
        parts.append(_text_part(CASE_INSTRUCTION))
        return [{"role": "system", "content": SYSTEM_PROMPT},
                {"role": "user", "content": parts}]

    def generate_case_summary(self, projection: ProjectionResult,
                              model: ClusterModel, case_id: str,
                              k: int = DEFAULT_CONTEXT_K) -> Report:
        """Case-level overview from all frame reports plus subsampled images.

        Frames without a stored report get one generated first.
        """
        channel = projection.spec.channel
        n = self.handle.n_frames(case_id, channel)
        frame_reports = []
        for t in range(n):
            report = self.reports.latest("frame", (case_id, t))
            if report is None:
                report = self.generate_frame_report(projection, model, case_id, t, k)
            frame_reports.append(report)
        messages = self.build_case_prompt(projection, case_id, frame_reports)
        text = self.vlm.chat(messages)
        report = Report(
            kind="case", target=case_id, text=text, context_refs=(),
            model_id=self.vlm.model_id, generated_at=_utcnow(),
            clustering_id=model.params.model_hash(),
            template_version=TEMPLATE_VERSION)
        self.reports.add(report)
        return report

    # -- provenance -----------------------------------------------------------

    def rebuild_frame_prompt(self, projection: ProjectionResult,
                             report: Report) -> list[dict]:
        """Re-assemble the exact prompt a frame report was generated from."""
        if report.kind not in ("frame", "transition"):
            raise ValueError(f"cannot rebuild prompts for kind {report.kind!r}")
        contexts = []
        for ref in report.context_refs:
            record = self.annotations.latest((report.clustering_id, ref.cluster_id))
            if record is None:
                raise NoAnnotatedCentroids(
                    f"annotation for cluster {ref.cluster_id} is gone")
            image, mime = self._read_image(projection.spec.channel, ref.centroid)
            contexts.append(_Context(cluster_id=ref.cluster_id, centroid=ref.centroid,
                                     text=record.text, distance=ref.distance,
                                     image=image, mime=mime))
        channel = projection.spec.channel
        case_id, t_index = report.target
        targets = [self._read_image(channel, (case_id, t_index))]
        if report.kind == "transition":
            targets.insert(0, self._read_image(channel, (case_id, t_index - 1)))
        return self.build_frame_prompt(contexts, targets)
