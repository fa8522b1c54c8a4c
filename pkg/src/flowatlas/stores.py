"""Durable annotation and report stores.

Both stores are append-only JSONL logs: one structured record per line,
rewritten atomically (write-then-rename) on every append. History is never
dropped; reads resolve to the latest version. Writers are serialized by a
per-store lock; the files are plain text and diff cleanly.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .errors import EmptyText

FrameKey = tuple[str, int]


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


class AppendLog:
    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def records(self) -> list[dict]:
        if not self.path.is_file():
            return []
        out = []
        for line in self.path.read_text().splitlines():
            if line.strip():
                out.append(json.loads(line))
        return out

    def append(self, record: dict) -> None:
        with self._lock:
            records = self.records()
            records.append(record)
            tmp = self.path.with_name(self.path.name + ".tmp")
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(tmp, "w") as fh:
                for rec in records:
                    fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
            tmp.replace(self.path)


@dataclass(frozen=True)
class AnnotationRecord:
    cluster_key: tuple[str, int]   # (clustering-params hash, cluster_id)
    centroid: FrameKey
    text: str
    author: str
    created_at: str
    updated_at: str
    version: int

    def to_json(self) -> dict:
        return {"cluster_key": list(self.cluster_key),
                "centroid": list(self.centroid),
                "text": self.text, "author": self.author,
                "created_at": self.created_at, "updated_at": self.updated_at,
                "version": self.version}

    @classmethod
    def from_json(cls, doc: dict) -> "AnnotationRecord":
        return cls(cluster_key=(doc["cluster_key"][0], int(doc["cluster_key"][1])),
                   centroid=(doc["centroid"][0], int(doc["centroid"][1])),
                   text=doc["text"], author=doc["author"],
                   created_at=doc["created_at"], updated_at=doc["updated_at"],
                   version=int(doc["version"]))


class AnnotationStore:
    """Expert annotations bound to cluster centroids, with full history."""

    def __init__(self, path: str | Path):
        self._log = AppendLog(path)

    def save(self, cluster_key: tuple[str, int], centroid: FrameKey,
             text: str, author: str) -> AnnotationRecord:
        if not text or not text.strip():
            raise EmptyText("annotation text must be non-empty")
        now = _utcnow()
        prior = self.history(cluster_key)
        record = AnnotationRecord(
            cluster_key=cluster_key, centroid=centroid, text=text, author=author,
            created_at=prior[0].created_at if prior else now,
            updated_at=now, version=len(prior) + 1)
        self._log.append(record.to_json())
        return record

    def history(self, cluster_key: tuple[str, int]) -> list[AnnotationRecord]:
        key = list(cluster_key)
        return [AnnotationRecord.from_json(doc) for doc in self._log.records()
                if doc["cluster_key"] == key]

    def latest(self, cluster_key: tuple[str, int]) -> AnnotationRecord | None:
        history = self.history(cluster_key)
        return history[-1] if history else None

    def annotated_clusters(self, model_hash: str) -> dict[int, AnnotationRecord]:
        """Latest annotation per cluster of one clustering, keyed by cluster id."""
        out: dict[int, AnnotationRecord] = {}
        for doc in self._log.records():
            if doc["cluster_key"][0] == model_hash:
                out[int(doc["cluster_key"][1])] = AnnotationRecord.from_json(doc)
        return out


@dataclass(frozen=True)
class ContextRef:
    cluster_id: int
    centroid: FrameKey
    distance: float

    def to_json(self) -> dict:
        return {"cluster_id": self.cluster_id, "centroid": list(self.centroid),
                "distance": self.distance}

    @classmethod
    def from_json(cls, doc: dict) -> "ContextRef":
        return cls(cluster_id=int(doc["cluster_id"]),
                   centroid=(doc["centroid"][0], int(doc["centroid"][1])),
                   distance=float(doc["distance"]))


@dataclass(frozen=True)
class Report:
    kind: str                      # "frame" | "case" | "transition"
    target: FrameKey | str         # (case_id, t_index) for frame/transition
    text: str
    context_refs: tuple[ContextRef, ...]  # ascending by distance
    model_id: str
    generated_at: str
    edited: bool = False
    clustering_id: str = ""        # provenance: which ClusterModel conditioned it
    template_version: str = "v1"

    def to_json(self) -> dict:
        target = list(self.target) if isinstance(self.target, tuple) else self.target
        return {"kind": self.kind, "target": target, "text": self.text,
                "context_refs": [ref.to_json() for ref in self.context_refs],
                "model_id": self.model_id, "generated_at": self.generated_at,
                "edited": self.edited, "clustering_id": self.clustering_id,
                "template_version": self.template_version}

    @classmethod
    def from_json(cls, doc: dict) -> "Report":
        target = doc["target"]
        if isinstance(target, list):
            target = (target[0], int(target[1]))
        return cls(kind=doc["kind"], target=target, text=doc["text"],
                   context_refs=tuple(ContextRef.from_json(d) for d in doc["context_refs"]),
                   model_id=doc["model_id"], generated_at=doc["generated_at"],
                   edited=bool(doc.get("edited", False)),
                   clustering_id=doc.get("clustering_id", ""),
                   template_version=doc.get("template_version", "v1"))


class ReportStore:
    def __init__(self, path: str | Path):
        self._log = AppendLog(path)

    def add(self, report: Report) -> None:
        if not report.text:
            raise EmptyText("report text must be non-empty")
        self._log.append(report.to_json())

    def history(self, kind: str, target: FrameKey | str) -> list[Report]:
        want = list(target) if isinstance(target, tuple) else target
        return [Report.from_json(doc) for doc in self._log.records()
                if doc["kind"] == kind and doc["target"] == want]

    def latest(self, kind: str, target: FrameKey | str) -> Report | None:
        history = self.history(kind, target)
        return history[-1] if history else None
