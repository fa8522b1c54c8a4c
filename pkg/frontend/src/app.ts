/** Application controller: owns the store, reacts to selection changes, and
 * implements the actions the views invoke. Click handlers update the store
 * synchronously (all views re-render in that same cycle); data fetches fill
 * in afterwards and trigger their own render. */

import { Api, ApiError, JOB_POLL_MS, pollProjection } from "./api.js";
import { Store } from "./state.js";
import { FilteringPanel } from "./views/filters.js";
import { TrajectoryView } from "./views/scatter.js";
import { SimilarTrajectoriesView } from "./views/similar.js";
import { DetailsView } from "./views/details.js";
import { ReportView } from "./views/report.js";

export interface AppElements {
  filters: HTMLElement;
  scatter: HTMLElement;
  similar: HTMLElement;
  details: HTMLElement;
  report: HTMLElement;
}

export class App {
  readonly store: Store;
  private lastCase: string | null = null;
  private lastFrame: number | null = null;
  private inflight = new Set<Promise<unknown>>();

  constructor(private api: Api, elements: AppElements,
              private pollMs: number = JOB_POLL_MS) {
    this.store = new Store();
    new FilteringPanel(elements.filters, this.store, {
      applyFilters: () => this.applyFilters(),
      drawScatter: () => this.drawScatter(),
    });
    new TrajectoryView(elements.scatter, this.store);
    new SimilarTrajectoriesView(elements.similar, this.store, {
      promoteCase: (caseId) => this.promoteCase(caseId),
    });
    new DetailsView(elements.details, this.store);
    new ReportView(elements.report, this.store, {
      saveDescription: (c, t, a) => this.saveDescription(c, t, a),
      generateFrameReport: () => this.generateFrameReport(),
      generateCaseSummary: () => this.generateCaseSummary(),
      saveReportEdit: (text) => this.saveReportEdit(text),
    });
    this.store.subscribe(() => this.onSelectionChange());
  }

  /** Resolves when every in-flight fetch chain has settled. */
  async idle(): Promise<void> {
    while (this.inflight.size > 0) {
      await Promise.allSettled([...this.inflight]);
    }
  }

  private track<T>(promise: Promise<T>): Promise<T> {
    this.inflight.add(promise);
    promise.finally(() => this.inflight.delete(promise)).catch(() => undefined);
    return promise;
  }

  private fail(err: unknown): void {
    const message = err instanceof ApiError
      ? `${err.code}: ${err.message}`
      : String(err);
    this.store.update({ error: message, busy: false });
  }

  async start(): Promise<void> {
    try {
      const health = await this.track(this.api.health());
      this.store.update({ datasetName: health.dataset_name });
      await this.applyFilters();
    } catch (err) {
      this.fail(err);
    }
  }

  async applyFilters(): Promise<void> {
    try {
      const state = this.store.getState();
      const body = await this.track(this.api.cases(state.filters));
      const ids = new Set(body.cases.map((c) => c.case_id));
      const checked = new Set([...state.checked].filter((c) => ids.has(c)));
      const channels = [...new Set(
        body.cases.flatMap((c) => Object.keys(c.frame_counts)))].sort();
      const channel = channels.includes(state.channel)
        ? state.channel
        : channels[0] ?? state.channel;
      this.store.update({ cases: body.cases, checked, channels, channel,
                          error: null });
    } catch (err) {
      this.fail(err);
    }
  }

  async drawScatter(): Promise<void> {
    const state = this.store.getState();
    const caseIds = [...state.checked].sort();
    if (caseIds.length === 0) return;
    this.store.update({ busy: true, jobStatus: "submitting", error: null });
    try {
      const { job } = await this.track(
        this.api.submitProjection(state.channel, caseIds));
      this.store.update({ jobStatus: job.status });
      const body = job.status === "done"
        ? await this.track(this.api.getProjection(job.job_id))
        : await this.track(pollProjection(this.api, job.job_id, this.pollMs));
      const { eps, minSamples } = this.store.getState();
      const clustering = await this.track(
        this.api.clustering(body.projection_id, eps, minSamples));
      const annotations = await this.track(
        this.api.annotations(clustering.clustering_id));
      const keep = this.store.getState().selectedCase;
      const stillVisible = keep !== null && caseIds.includes(keep);
      this.store.update({
        projectionId: body.projection_id,
        coords: body.coords ?? [],
        clustering,
        annotations: annotations.annotations,
        jobStatus: "done",
        busy: false,
        selectedCase: stillVisible ? keep : null,
        selectedFrame: stillVisible ? this.store.getState().selectedFrame : null,
        similar: stillVisible ? this.store.getState().similar : null,
        frames: stillVisible ? this.store.getState().frames : [],
      });
      if (stillVisible) this.refreshCaseData(keep);
    } catch (err) {
      this.store.update({ jobStatus: "failed" });
      this.fail(err);
    }
  }

  async promoteCase(caseId: string): Promise<void> {
    this.store.selectCase(caseId);
    await this.idle();
  }

  private onSelectionChange(): void {
    const state = this.store.getState();
    if (state.selectedCase !== this.lastCase) {
      this.lastCase = state.selectedCase;
      this.lastFrame = state.selectedFrame;
      if (state.selectedCase !== null) {
        this.refreshCaseData(state.selectedCase);
      } else {
        this.store.update({ frames: [], similar: null, caseReport: null,
                            frameReport: null });
      }
      return;
    }
    if (state.selectedFrame !== this.lastFrame) {
      this.lastFrame = state.selectedFrame;
      this.refreshFrameReport();
    }
  }

  private refreshCaseData(caseId: string): void {
    const state = this.store.getState();
    this.track((async () => {
      try {
        const frames = await this.api.frames(caseId, state.channel);
        if (this.store.getState().selectedCase === caseId) {
          this.store.update({ frames: frames.frames });
        }
        const caseReport = await this.api.storedCaseReport(caseId);
        if (this.store.getState().selectedCase === caseId) {
          this.store.update({ caseReport });
        }
        if (state.projectionId !== null) {
          const similar = await this.api.similar(state.projectionId, caseId);
          if (this.store.getState().selectedCase === caseId) {
            this.store.update({ similar });
          }
        }
      } catch (err) {
        this.fail(err);
      }
    })());
    this.refreshFrameReport();
  }

  private refreshFrameReport(): void {
    const state = this.store.getState();
    if (state.selectedCase === null || state.selectedFrame === null) {
      this.store.update({ frameReport: null });
      return;
    }
    const caseId = state.selectedCase;
    const tIndex = state.selectedFrame;
    this.track((async () => {
      try {
        const report = await this.api.storedFrameReport(caseId, tIndex);
        const current = this.store.getState();
        if (current.selectedCase === caseId && current.selectedFrame === tIndex) {
          this.store.update({ frameReport: report });
        }
      } catch (err) {
        this.fail(err);
      }
    })());
  }

  async saveDescription(clusterId: number, text: string,
                        author: string): Promise<void> {
    const state = this.store.getState();
    if (!state.clustering) return;
    try {
      await this.track(this.api.saveAnnotation(
        state.clustering.clustering_id, clusterId, text, author));
      const annotations = await this.track(
        this.api.annotations(state.clustering.clustering_id));
      this.store.update({ annotations: annotations.annotations,
                          annotationDraft: "", error: null });
    } catch (err) {
      this.fail(err);
    }
  }

  async generateFrameReport(): Promise<void> {
    const state = this.store.getState();
    if (!state.clustering || state.selectedCase === null
        || state.selectedFrame === null) return;
    this.store.update({ busy: true });
    try {
      const { report } = await this.track(this.api.generateFrameReport(
        state.clustering.clustering_id, state.selectedCase, state.selectedFrame));
      this.store.update({ frameReport: report, busy: false, error: null });
    } catch (err) {
      this.fail(err);
    }
  }

  async generateCaseSummary(): Promise<void> {
    const state = this.store.getState();
    if (!state.clustering || state.selectedCase === null) return;
    this.store.update({ busy: true });
    try {
      const { report } = await this.track(this.api.generateCaseReport(
        state.clustering.clustering_id, state.selectedCase));
      this.store.update({ caseReport: report, busy: false, error: null });
    } catch (err) {
      this.fail(err);
    }
  }

  async saveReportEdit(text: string): Promise<void> {
    const state = this.store.getState();
    if (state.selectedCase === null || state.selectedFrame === null) return;
    try {
      const { report } = await this.track(this.api.editFrameReport(
        state.selectedCase, state.selectedFrame, text));
      this.store.update({ frameReport: report, error: null });
    } catch (err) {
      this.fail(err);
    }
  }
}

export function mountApp(root: Document | HTMLElement, api: Api,
                         pollMs: number = JOB_POLL_MS): App {
  const get = (id: string): HTMLElement => {
    const node = (root instanceof Document ? root : root.ownerDocument!)
      .getElementById(id);
    if (!node) throw new Error(`missing #${id} container`);
    return node;
  };
  return new App(api, {
    filters: get("panel-filters"),
    scatter: get("panel-scatter"),
    similar: get("panel-similar"),
    details: get("panel-details"),
    report: get("panel-report"),
  }, pollMs);
}
