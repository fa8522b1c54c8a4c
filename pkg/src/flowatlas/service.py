"""HTTP API exposing the full workflow to the frontend and to scripts.

Single-process deployment over one immutable dataset. Long computations
(projection fits over many cases) run as polled jobs whose ids are content
hashes of their parameters, so identical requests map to identical results
and URLs are reproducible. Clustering, trajectories and similarity queries
answer synchronously at desk scale. Only the annotation and report stores
are writable.
"""

from __future__ import annotations

import json
import logging
import sys
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import __version__
from .clustering import ClusteringParams, ClusterModel, cluster_projection
from .dataset import DatasetHandle, filter_cases, load_dataset
from .errors import (
    FlowAtlasError,
    InvalidRange,
    MalformedManifest,
    MissingFile,
    MissingFrameCoordinate,
    DuplicateRow,
    NoAnnotatedCentroids,
    TooFewFrames,
    TrajectoryTooShort,
    UnknownCase,
    UnknownCluster,
    VlmMalformedResponse,
    VlmUnavailable,
)
from .projection import (
    MalformedProjectionFile,
    ProjectionCache,
    ProjectionResult,
    ProjectionSpec,
    fit_pca_2d,
    import_external_projection,
)
from .reports import ReportEngine, detect_transitions
from .stores import AnnotationStore, Report, ReportStore
from .trajectory import DissimilarityCache, build_trajectory, top_k_similar
from .vlm import VlmClient, client_from_env

SCHEMA_VERSION = 1

log = logging.getLogger("flowatlas.service")


def _status_for(exc: FlowAtlasError) -> int:
    if isinstance(exc, UnknownCluster):
        return 409 if exc.is_noise else 404
    if isinstance(exc, (UnknownCase, MissingFile)):
        return 404
    if isinstance(exc, NoAnnotatedCentroids):
        return 409
    if isinstance(exc, VlmUnavailable):
        return 503
    if isinstance(exc, VlmMalformedResponse):
        return 502
    if isinstance(exc, (InvalidRange, MalformedManifest, MalformedProjectionFile,
                        TooFewFrames, TrajectoryTooShort, MissingFrameCoordinate,
                        DuplicateRow)):
        return 400
    return 400


@dataclass
class Job:
    job_id: str
    kind: str                    # projection | clustering | similarity
    status: str = "pending"      # pending | running | done | failed
    result_ref: str | None = None
    error: dict | None = None

    def to_json(self) -> dict:
        return {"job_id": self.job_id, "kind": self.kind, "status": self.status,
                "result_ref": self.result_ref, "error": self.error}


class JobManager:
    def __init__(self, max_workers: int | None = None):
        self._pool = ThreadPoolExecutor(max_workers=max_workers)
        self._jobs: dict[str, Job] = {}
        self._lock = threading.Lock()

    def get(self, job_id: str) -> Job | None:
        return self._jobs.get(job_id)

    def mark_done(self, job_id: str, kind: str) -> Job:
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None:
                job = Job(job_id=job_id, kind=kind)
                self._jobs[job_id] = job
            job.status = "done"
            job.result_ref = job_id
            return job

    def submit(self, job_id: str, kind: str, fn) -> Job:
        with self._lock:
            existing = self._jobs.get(job_id)
            if existing is not None and existing.status != "failed":
                return existing
            job = Job(job_id=job_id, kind=kind)
            self._jobs[job_id] = job

        def run():
            job.status = "running"
            try:
                fn()
            except FlowAtlasError as exc:
                job.status = "failed"
                job.error = {"code": exc.code, "message": exc.message}
            except Exception as exc:  # defensive: report, never hang the poller
                job.status = "failed"
                job.error = {"code": "internal_error", "message": str(exc)}
            else:
                job.status = "done"
                job.result_ref = job_id

        self._pool.submit(run)
        return job


class ProjectionRequest(BaseModel):
    channel: str
    case_ids: list[str]
    method: str = "pca"
    external_file: str | None = None
    method_params: dict | None = None


class ClusteringRequest(BaseModel):
    projection_id: str
    eps: float
    min_samples: int


class AnnotationBody(BaseModel):
    text: str
    author: str = "anonymous"


class FrameReportRequest(BaseModel):
    clustering_id: str
    case_id: str
    t_index: int
    k: int = 3


class CaseReportRequest(BaseModel):
    clustering_id: str
    case_id: str
    k: int = 3


class ReportEditBody(BaseModel):
    text: str


class AppState:
    def __init__(self, handle: DatasetHandle, cache_dir: Path | None,
                 store_dir: Path, vlm: VlmClient | None):
        self.handle = handle
        self.projections = ProjectionCache(cache_dir)
        self.clusterings: dict[str, ClusterModel] = {}
        self.dissimilarities = DissimilarityCache()
        self.jobs = JobManager()
        store_dir.mkdir(parents=True, exist_ok=True)
        self.annotations = AnnotationStore(store_dir / "annotations.jsonl")
        self.reports = ReportStore(store_dir / "reports.jsonl")
        self._vlm = vlm
        self._lock = threading.Lock()

    @property
    def vlm(self) -> VlmClient:
        if self._vlm is None:
            self._vlm = client_from_env()
        return self._vlm

    def engine(self) -> ReportEngine:
        return ReportEngine(self.handle, self.annotations, self.reports, self.vlm)

    def projection_or_404(self, projection_id: str) -> ProjectionResult:
        result = self.projections.get(projection_id)
        if result is None:
            job = self.jobs.get(projection_id)
            if job is not None and job.status in ("pending", "running"):
                raise UnknownCase(f"projection {projection_id} is still {job.status}")
            raise UnknownCase(f"unknown projection {projection_id}")
        return result

    def clustering_or_404(self, clustering_id: str) -> ClusterModel:
        model = self.clusterings.get(clustering_id)
        if model is None:
            raise UnknownCase(f"unknown clustering {clustering_id}")
        return model

    def remember_clustering(self, model: ClusterModel) -> str:
        clustering_id = model.params.model_hash()
        with self._lock:
            self.clusterings.setdefault(clustering_id, model)
        return clustering_id


def _parse_bound(raw: str | None, name: str) -> float | None:
    if raw is None or raw == "":
        return None
    try:
        return float(raw)
    except ValueError:
        raise InvalidRange(f"{name} is not a number: {raw!r}") from None


def _annotation_json(record) -> dict:
    return record.to_json()


def _report_json(report: Report) -> dict:
    return report.to_json()


def _projection_body(state: AppState, projection_id: str,
                     result: ProjectionResult) -> dict:
    coords = [{"case_id": c, "t_index": t, "x": xy[0], "y": xy[1]}
              for (c, t), xy in sorted(result.coords.items())]
    body = {
        "schema_version": SCHEMA_VERSION,
        "projection_id": projection_id,
        "status": "done",
        "channel": result.spec.channel,
        "method": result.spec.method,
        "scope": list(result.spec.scope),
        "coords": coords,
        "fit_stats": None,
    }
    if result.fit_stats is not None:
        body["fit_stats"] = {
            "eigenvalues": list(result.fit_stats.eigenvalues),
            "degenerate_variance": result.fit_stats.degenerate_variance,
        }
    return body


def create_app(manifest_path: str | Path | None = None,
               handle: DatasetHandle | None = None,
               cache_dir: str | Path | None = None,
               store_dir: str | Path | None = None,
               vlm: VlmClient | None = None,
               static_dir: str | Path | None = None) -> FastAPI:
    if handle is None:
        if manifest_path is None:
            raise ValueError("need manifest_path or handle")
        handle = load_dataset(manifest_path)
    cache_dir = Path(cache_dir) if cache_dir else None
    if store_dir is None:
        store_dir = (cache_dir / "stores") if cache_dir else Path("stores")
    state = AppState(handle, cache_dir, Path(store_dir), vlm)

    app = FastAPI(title="flowatlas", version=__version__)
    app.state.atlas = state

    @app.exception_handler(FlowAtlasError)
    async def on_domain_error(request: Request, exc: FlowAtlasError):
        return JSONResponse(status_code=_status_for(exc),
                            content={"schema_version": SCHEMA_VERSION,
                                     "error": {"code": exc.code,
                                               "message": exc.message}})

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400,
                            content={"schema_version": SCHEMA_VERSION,
                                     "error": {"code": "invalid_request",
                                               "message": str(exc.errors())}})

    @app.middleware("http")
    async def request_logging(request: Request, call_next):
        start = time.monotonic()
        response = await call_next(request)
        log.info(json.dumps({
            "method": request.method,
            "path": request.url.path,
            "status": response.status_code,
            "duration_ms": round((time.monotonic() - start) * 1000, 2),
        }))
        return response

    # -- dataset ---------------------------------------------------------------

    @app.get("/api/health")
    def health():
        return {"schema_version": SCHEMA_VERSION, "status": "ok",
                "dataset_name": state.handle.name, "n_cases": state.handle.n_cases}

    @app.get("/api/cases")
    def cases(p_min: str | None = None, p_max: str | None = None,
              t_min: str | None = None, t_max: str | None = None,
              h2o_min: str | None = None, h2o_max: str | None = None):
        ids = filter_cases(
            state.handle,
            p_range=(_parse_bound(p_min, "p_min"), _parse_bound(p_max, "p_max")),
            t_range=(_parse_bound(t_min, "t_min"), _parse_bound(t_max, "t_max")),
            h2o_range=(_parse_bound(h2o_min, "h2o_min"),
                       _parse_bound(h2o_max, "h2o_max")))
        rows = []
        for case_id in ids:
            rec = state.handle.case(case_id)
            rows.append({
                "case_id": case_id,
                "params": {"P_MPa": rec.params.p_static,
                           "T_K": rec.params.t_static,
                           "H2O_pct": rec.params.h2o},
                "frame_counts": {ch: len(data.frames)
                                 for ch, data in sorted(rec.channels.items())},
            })
        return {"schema_version": SCHEMA_VERSION, "cases": rows}

    @app.get("/api/frames/{case_id}")
    def frames(case_id: str, channel: str):
        refs = state.handle.frames(case_id, channel)
        return {"schema_version": SCHEMA_VERSION, "case_id": case_id,
                "channel": channel,
                "frames": [{"t_index": f.t_index, "time_ms": f.time_ms,
                            "image_url": f"/api/image/{case_id}/{channel}/{f.t_index}"}
                           for f in refs]}

    @app.get("/api/image/{case_id}/{channel}/{t_index}")
    def image(case_id: str, channel: str, t_index: int):
        path = state.handle.image_path(case_id, channel, t_index)
        if not path.is_file():
            raise MissingFile(f"image missing on disk: {path}")
        return FileResponse(path)

    # -- projection ------------------------------------------------------------

    @app.post("/api/projection")
    def submit_projection(body: ProjectionRequest):
        spec = _spec_from_request(state, body)
        projection_id = spec.spec_hash()
        if state.projections.get(projection_id) is not None:
            job = state.jobs.mark_done(projection_id, "projection")
            return {"schema_version": SCHEMA_VERSION, "job": job.to_json()}

        def compute():
            if spec.method == "pca":
                result = fit_pca_2d(state.handle, spec.channel, spec.scope)
            else:
                result = import_external_projection(
                    state.handle, spec.channel, spec.scope,
                    _resolve_external(state, spec.external_file),
                    method_params=spec.method_params)
                # key the result by the spec as requested (pre-path-resolution)
                result = replace(result, spec=spec)
            state.projections.put(result)

        job = state.jobs.submit(projection_id, "projection", compute)
        return {"schema_version": SCHEMA_VERSION, "job": job.to_json()}

    @app.get("/api/projection/{projection_id}")
    def get_projection(projection_id: str):
        result = state.projections.get(projection_id)
        if result is not None:
            return _projection_body(state, projection_id, result)
        job = state.jobs.get(projection_id)
        if job is None:
            raise UnknownCase(f"unknown projection {projection_id}")
        return {"schema_version": SCHEMA_VERSION, "projection_id": projection_id,
                "status": job.status, "error": job.error}

    # -- clustering --------------------------------------------------------------

    @app.post("/api/clustering")
    def run_clustering(body: ClusteringRequest):
        if body.eps <= 0 or body.min_samples < 1:
            raise InvalidRange("eps must be > 0 and min_samples >= 1")
        projection = state.projection_or_404(body.projection_id)
        cached_id = ClusteringParams(
            eps=body.eps, min_samples=body.min_samples,
            projection_hash=body.projection_id).model_hash()
        model = state.clusterings.get(cached_id)
        if model is None:
            model = cluster_projection(projection, body.eps, body.min_samples)
        clustering_id = state.remember_clustering(model)
        labels = [{"case_id": c, "t_index": t, "label": lab}
                  for (c, t), lab in sorted(model.labels.items())]
        centroids = [{"cluster_id": cid,
                      "case_id": model.centroids[cid][0],
                      "t_index": model.centroids[cid][1],
                      "x": model.centroid_coords[cid][0],
                      "y": model.centroid_coords[cid][1]}
                     for cid in sorted(model.centroids)]
        return {"schema_version": SCHEMA_VERSION,
                "clustering_id": clustering_id,
                "projection_id": body.projection_id,
                "eps": body.eps, "min_samples": body.min_samples,
                "n_clusters": model.n_clusters,
                "noise_count": sum(1 for v in model.labels.values() if v == -1),
                "labels": labels, "centroids": centroids}

    @app.get("/api/transitions/{clustering_id}/{case_id}")
    def transitions(clustering_id: str, case_id: str):
        model = state.clustering_or_404(clustering_id)
        events = detect_transitions(case_id, model)
        return {"schema_version": SCHEMA_VERSION, "case_id": case_id,
                "transitions": [{"t_index": t, "from_cluster": a, "to_cluster": b,
                                 "involves_noise": a == -1 or b == -1}
                                for t, a, b in events]}

    # -- trajectories and similarity ----------------------------------------------

    def _trajectory_body(projection, projection_id, case_id):
        trajectory = build_trajectory(projection, case_id)
        times = {f.t_index: f.time_ms
                 for f in state.handle.frames(case_id, projection.spec.channel)}
        return {"case_id": case_id,
                "channel": trajectory.channel,
                "points": [{"t_index": t, "time_ms": times.get(t), "x": x, "y": y}
                           for t, x, y in trajectory.points]}

    @app.get("/api/trajectory/{projection_id}/{case_id}")
    def trajectory(projection_id: str, case_id: str):
        projection = state.projection_or_404(projection_id)
        body = _trajectory_body(projection, projection_id, case_id)
        body.update({"schema_version": SCHEMA_VERSION, "projection_id": projection_id})
        return body

    @app.get("/api/similar/{projection_id}/{case_id}")
    def similar(projection_id: str, case_id: str, k: int = 6):
        projection = state.projection_or_404(projection_id)
        ranked = top_k_similar(state.handle, projection, case_id, k=k,
                               cache=state.dissimilarities)
        results = []
        for other_id, value in ranked:
            entry = _trajectory_body(projection, projection_id, other_id)
            entry["value"] = value
            results.append(entry)
        return {"schema_version": SCHEMA_VERSION, "projection_id": projection_id,
                "target": case_id, "k": k, "results": results}

    # -- annotations ----------------------------------------------------------------

    @app.put("/api/annotation/{clustering_id}/{cluster_id}")
    def put_annotation(clustering_id: str, cluster_id: int, body: AnnotationBody):
        from .reports import save_annotation
        model = state.clustering_or_404(clustering_id)
        record = save_annotation(state.annotations, model, cluster_id,
                                 body.text, body.author)
        return {"schema_version": SCHEMA_VERSION,
                "annotation": _annotation_json(record)}

    @app.get("/api/annotation/{clustering_id}/{cluster_id}")
    def get_annotation(clustering_id: str, cluster_id: int):
        record = state.annotations.latest((clustering_id, cluster_id))
        if record is None:
            raise UnknownCluster(f"no annotation for cluster {cluster_id}")
        history = state.annotations.history((clustering_id, cluster_id))
        return {"schema_version": SCHEMA_VERSION,
                "annotation": _annotation_json(record), "versions": len(history)}

    @app.get("/api/annotations/{clustering_id}")
    def all_annotations(clustering_id: str):
        annotated = state.annotations.annotated_clusters(clustering_id)
        return {"schema_version": SCHEMA_VERSION,
                "annotations": {str(cid): _annotation_json(rec)
                                for cid, rec in sorted(annotated.items())}}

    # -- reports ---------------------------------------------------------------------

    def _context_for(clustering_id: str):
        model = state.clustering_or_404(clustering_id)
        projection = state.projection_or_404(model.params.projection_hash)
        return model, projection

    @app.post("/api/report/frame")
    def report_frame(body: FrameReportRequest):
        model, projection = _context_for(body.clustering_id)
        report = state.engine().generate_frame_report(
            projection, model, body.case_id, body.t_index, k=body.k)
        return {"schema_version": SCHEMA_VERSION, "report": _report_json(report)}

    @app.post("/api/report/case")
    def report_case(body: CaseReportRequest):
        model, projection = _context_for(body.clustering_id)
        report = state.engine().generate_case_summary(
            projection, model, body.case_id, k=body.k)
        return {"schema_version": SCHEMA_VERSION, "report": _report_json(report)}

    @app.post("/api/report/transition")
    def report_transition(body: FrameReportRequest):
        model, projection = _context_for(body.clustering_id)
        report = state.engine().generate_transition_report(
            projection, model, body.case_id, body.t_index, k=body.k)
        return {"schema_version": SCHEMA_VERSION, "report": _report_json(report)}

    @app.get("/api/report/frame/{case_id}/{t_index}")
    def get_frame_report(case_id: str, t_index: int):
        report = state.reports.latest("frame", (case_id, t_index))
        if report is None:
            raise UnknownCase(f"no report for frame ({case_id}, {t_index})")
        return {"schema_version": SCHEMA_VERSION, "report": _report_json(report)}

    @app.get("/api/report/case/{case_id}")
    def get_case_report(case_id: str):
        report = state.reports.latest("case", case_id)
        if report is None:
            raise UnknownCase(f"no case report for {case_id}")
        return {"schema_version": SCHEMA_VERSION, "report": _report_json(report)}

    @app.put("/api/report/frame/{case_id}/{t_index}")
    def edit_frame_report(case_id: str, t_index: int, body: ReportEditBody):
        prior = state.reports.latest("frame", (case_id, t_index))
        if prior is None:
            raise UnknownCase(f"no report for frame ({case_id}, {t_index})")
        from .stores import _utcnow
        edited = Report(kind="frame", target=(case_id, t_index), text=body.text,
                        context_refs=prior.context_refs, model_id=prior.model_id,
                        generated_at=_utcnow(), edited=True,
                        clustering_id=prior.clustering_id,
                        template_version=prior.template_version)
        state.reports.add(edited)
        return {"schema_version": SCHEMA_VERSION, "report": _report_json(edited)}

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="static")

    return app


def _spec_from_request(state: AppState, body: ProjectionRequest) -> ProjectionSpec:
    if not body.case_ids:
        raise InvalidRange("case_ids must be non-empty")
    for case_id in body.case_ids:
        if not state.handle.has_case(case_id):
            raise UnknownCase(f"unknown case {case_id!r}")
    try:
        return ProjectionSpec(channel=body.channel, method=body.method,
                              scope=tuple(body.case_ids),
                              external_file=body.external_file,
                              method_params=body.method_params)
    except ValueError as exc:
        raise InvalidRange(str(exc)) from exc


def _resolve_external(state: AppState, external_file: str) -> Path:
    path = Path(external_file)
    if not path.is_absolute():
        path = state.handle.root / path
    return path


def serve(manifest: str, port: int = 8640, host: str = "127.0.0.1",
          cache_dir: str = "cache", store_dir: str | None = None,
          static_dir: str | None = None) -> None:
    """Run the API server (uvicorn); structured request log goes to stderr."""
    import uvicorn

    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    app = create_app(manifest_path=manifest, cache_dir=cache_dir,
                     store_dir=store_dir, static_dir=static_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")
