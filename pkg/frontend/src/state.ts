/** Single store for the coordinated views.
 *
 * All view updates are pure functions of this state plus fetched data;
 * subscribers are notified synchronously on every change, so one dispatch
 * equals one render cycle across every view. The store normalizes the
 * selection so the selected frame always belongs to the selected case.
 */

import type {
  CaseRow,
  ClusteringBody,
  CoordRow,
  FilterBounds,
  FrameEntry,
  ReportDoc,
  SimilarBody,
  AnnotationRecord,
} from "./api.js";

export type SortColumn = "case_id" | "P_MPa" | "T_K" | "H2O_pct";

export interface ViewState {
  datasetName: string;
  channel: string;
  channels: string[];
  filters: FilterBounds;
  cases: CaseRow[];
  checked: ReadonlySet<string>;
  sort: { column: SortColumn; ascending: boolean };
  eps: number;
  minSamples: number;
  jobStatus: string | null;
  projectionId: string | null;
  coords: CoordRow[];
  clustering: ClusteringBody | null;
  selectedCase: string | null;
  selectedFrame: number | null;
  hover: { caseId: string; tIndex: number } | null;
  showCentroids: boolean;
  similar: SimilarBody | null;
  frames: FrameEntry[];
  annotations: Record<string, AnnotationRecord>;
  annotationDraft: string;
  frameReport: ReportDoc | null;
  caseReport: ReportDoc | null;
  busy: boolean;
  error: string | null;
}

export function initialState(): ViewState {
  return {
    datasetName: "",
    channel: "pressure",
    channels: [],
    filters: { pMin: null, pMax: null, tMin: null, tMax: null, h2oMin: null, h2oMax: null },
    cases: [],
    checked: new Set(),
    sort: { column: "case_id", ascending: true },
    eps: 1.0,
    minSamples: 2,
    jobStatus: null,
    projectionId: null,
    coords: [],
    clustering: null,
    selectedCase: null,
    selectedFrame: null,
    hover: null,
    showCentroids: true,
    similar: null,
    frames: [],
    annotations: {},
    annotationDraft: "",
    frameReport: null,
    caseReport: null,
    busy: false,
    error: null,
  };
}

function normalize(state: ViewState): ViewState {
  if (state.selectedFrame !== null && state.selectedCase === null) {
    return { ...state, selectedFrame: null };
  }
  return state;
}

export type Listener = (state: ViewState) => void;

export class Store {
  private state: ViewState;
  private listeners: Listener[] = [];

  constructor(state: ViewState = initialState()) {
    this.state = normalize(state);
  }

  getState(): ViewState {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  /** Apply a partial update and notify every subscriber synchronously. */
  update(patch: Partial<ViewState>): void {
    this.state = normalize({ ...this.state, ...patch });
    for (const listener of this.listeners.slice()) listener(this.state);
  }

  /** Select a case; keeps the frame only if it belongs to the same case. */
  selectCase(caseId: string | null): void {
    const keepFrame = caseId !== null && caseId === this.state.selectedCase;
    this.update({
      selectedCase: caseId,
      selectedFrame: keepFrame ? this.state.selectedFrame : null,
    });
  }

  /** Select a frame; the owning case is selected in the same update. */
  selectFrame(caseId: string, tIndex: number): void {
    this.update({ selectedCase: caseId, selectedFrame: tIndex });
  }

  toggleChecked(caseId: string): void {
    const checked = new Set(this.state.checked);
    if (checked.has(caseId)) checked.delete(caseId);
    else checked.add(caseId);
    this.update({ checked });
  }
}

export function sortedCases(state: ViewState): CaseRow[] {
  const { column, ascending } = state.sort;
  const key = (row: CaseRow): string | number =>
    column === "case_id" ? row.case_id : row.params[column];
  const rows = state.cases.slice().sort((a, b) => {
    const ka = key(a), kb = key(b);
    if (ka < kb) return -1;
    if (ka > kb) return 1;
    return a.case_id < b.case_id ? -1 : 1;
  });
  return ascending ? rows : rows.reverse();
}

const labelMaps = new WeakMap<ClusteringBody, Map<string, number>>();

/** Cluster label of a frame, or null before clustering. */
export function labelOf(state: ViewState, caseId: string, tIndex: number): number | null {
  const model = state.clustering;
  if (!model) return null;
  let map = labelMaps.get(model);
  if (!map) {
    map = new Map(model.labels.map((l) => [`${l.case_id}|${l.t_index}`, l.label]));
    labelMaps.set(model, map);
  }
  return map.get(`${caseId}|${tIndex}`) ?? null;
}
