/** Typed client for the flowatlas HTTP API. Every displayed value in the UI
 * originates from one of these responses. */

export interface CaseParams {
  P_MPa: number;
  T_K: number;
  H2O_pct: number;
}

export interface CaseRow {
  case_id: string;
  params: CaseParams;
  frame_counts: Record<string, number>;
}

export interface JobHandle {
  job_id: string;
  kind: string;
  status: "pending" | "running" | "done" | "failed";
  result_ref: string | null;
  error: { code: string; message: string } | null;
}

export interface CoordRow {
  case_id: string;
  t_index: number;
  x: number;
  y: number;
}

export interface ProjectionBody {
  projection_id: string;
  status: string;
  channel?: string;
  method?: string;
  scope?: string[];
  coords?: CoordRow[];
  error?: { code: string; message: string } | null;
}

export interface LabelRow {
  case_id: string;
  t_index: number;
  label: number;
}

export interface CentroidRow {
  cluster_id: number;
  case_id: string;
  t_index: number;
  x: number;
  y: number;
}

export interface ClusteringBody {
  clustering_id: string;
  projection_id: string;
  eps: number;
  min_samples: number;
  n_clusters: number;
  noise_count: number;
  labels: LabelRow[];
  centroids: CentroidRow[];
}

export interface TrajectoryPoint {
  t_index: number;
  time_ms: number | null;
  x: number;
  y: number;
}

export interface SimilarEntry {
  case_id: string;
  value: number;
  points: TrajectoryPoint[];
}

export interface SimilarBody {
  target: string;
  k: number;
  results: SimilarEntry[];
}

export interface FrameEntry {
  t_index: number;
  time_ms: number;
  image_url: string;
}

export interface AnnotationRecord {
  cluster_key: [string, number];
  centroid: [string, number];
  text: string;
  author: string;
  created_at: string;
  updated_at: string;
  version: number;
}

export interface ReportDoc {
  kind: string;
  target: [string, number] | string;
  text: string;
  context_refs: { cluster_id: number; centroid: [string, number]; distance: number }[];
  model_id: string;
  generated_at: string;
  edited: boolean;
  clustering_id: string;
}

export interface FilterBounds {
  pMin: number | null;
  pMax: number | null;
  tMin: number | null;
  tMax: number | null;
  h2oMin: number | null;
  h2oMax: number | null;
}

export class ApiError extends Error {
  constructor(public status: number, public code: string, message: string) {
    super(message);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, init);
  const body = await response.json();
  if (!response.ok) {
    const err = body?.error ?? { code: "http_error", message: response.statusText };
    throw new ApiError(response.status, err.code, err.message);
  }
  return body as T;
}

function jsonInit(method: string, payload: unknown): RequestInit {
  return {
    method,
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(payload),
  };
}

export class Api {
  constructor(private base: string = "") {}

  health(): Promise<{ dataset_name: string; n_cases: number }> {
    return request(`${this.base}/api/health`);
  }

  cases(filters: FilterBounds): Promise<{ cases: CaseRow[] }> {
    const params = new URLSearchParams();
    const entries: [string, number | null][] = [
      ["p_min", filters.pMin], ["p_max", filters.pMax],
      ["t_min", filters.tMin], ["t_max", filters.tMax],
      ["h2o_min", filters.h2oMin], ["h2o_max", filters.h2oMax],
    ];
    for (const [key, value] of entries) {
      if (value !== null && !Number.isNaN(value)) params.set(key, String(value));
    }
    const query = params.toString();
    return request(`${this.base}/api/cases${query ? "?" + query : ""}`);
  }

  submitProjection(channel: string, caseIds: string[]): Promise<{ job: JobHandle }> {
    return request(`${this.base}/api/projection`,
      jsonInit("POST", { channel, case_ids: caseIds, method: "pca" }));
  }

  getProjection(projectionId: string): Promise<ProjectionBody> {
    return request(`${this.base}/api/projection/${projectionId}`);
  }

  clustering(projectionId: string, eps: number, minSamples: number): Promise<ClusteringBody> {
    return request(`${this.base}/api/clustering`,
      jsonInit("POST", { projection_id: projectionId, eps, min_samples: minSamples }));
  }

  similar(projectionId: string, caseId: string, k = 6): Promise<SimilarBody> {
    return request(`${this.base}/api/similar/${projectionId}/${caseId}?k=${k}`);
  }

  frames(caseId: string, channel: string): Promise<{ frames: FrameEntry[] }> {
    return request(`${this.base}/api/frames/${caseId}?channel=${encodeURIComponent(channel)}`);
  }

  saveAnnotation(clusteringId: string, clusterId: number, text: string,
                 author: string): Promise<{ annotation: AnnotationRecord }> {
    return request(`${this.base}/api/annotation/${clusteringId}/${clusterId}`,
      jsonInit("PUT", { text, author }));
  }

  annotations(clusteringId: string): Promise<{ annotations: Record<string, AnnotationRecord> }> {
    return request(`${this.base}/api/annotations/${clusteringId}`);
  }

  generateFrameReport(clusteringId: string, caseId: string, tIndex: number,
                      k = 3): Promise<{ report: ReportDoc }> {
    return request(`${this.base}/api/report/frame`,
      jsonInit("POST", { clustering_id: clusteringId, case_id: caseId, t_index: tIndex, k }));
  }

  generateCaseReport(clusteringId: string, caseId: string,
                     k = 3): Promise<{ report: ReportDoc }> {
    return request(`${this.base}/api/report/case`,
      jsonInit("POST", { clustering_id: clusteringId, case_id: caseId, k }));
  }

  async storedFrameReport(caseId: string, tIndex: number): Promise<ReportDoc | null> {
    try {
      const body = await request<{ report: ReportDoc }>(
        `${this.base}/api/report/frame/${caseId}/${tIndex}`);
      return body.report;
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) return null;
      throw err;
    }
  }

  async storedCaseReport(caseId: string): Promise<ReportDoc | null> {
    try {
      const body = await request<{ report: ReportDoc }>(
        `${this.base}/api/report/case/${caseId}`);
      return body.report;
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) return null;
      throw err;
    }
  }

  editFrameReport(caseId: string, tIndex: number, text: string): Promise<{ report: ReportDoc }> {
    return request(`${this.base}/api/report/frame/${caseId}/${tIndex}`,
      jsonInit("PUT", { text }));
  }
}

export const sleep = (ms: number) => new Promise<void>((r) => setTimeout(r, ms));

export const JOB_POLL_MS = 500;

/** Poll a projection job every 500 ms until it reaches a terminal state. */
export async function pollProjection(api: Api, projectionId: string,
                                     waitMs: number = JOB_POLL_MS): Promise<ProjectionBody> {
  for (;;) {
    const body = await api.getProjection(projectionId);
    if (body.status === "done") return body;
    if (body.status === "failed") {
      const err = body.error ?? { code: "job_failed", message: "projection failed" };
      throw new ApiError(500, err.code, err.message);
    }
    await sleep(waitMs);
  }
}
