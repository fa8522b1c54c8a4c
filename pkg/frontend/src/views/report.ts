/** Report View: expert annotation of the selected frame's cluster centroid,
 * VLM-generated frame description and case summary (with edit + export). */

import type { Store, ViewState } from "../state.js";
import { labelOf } from "../state.js";

export interface ReportActions {
  saveDescription(clusterId: number, text: string, author: string): Promise<void>;
  generateFrameReport(): Promise<void>;
  generateCaseSummary(): Promise<void>;
  saveReportEdit(text: string): Promise<void>;
}

export class ReportView {
  constructor(private root: HTMLElement, private store: Store,
              private actions: ReportActions) {
    store.subscribe(() => this.render());
    this.render();
  }

  private render(): void {
    const state = this.store.getState();
    this.root.textContent = "";
    const title = document.createElement("h3");
    title.textContent = "Report View";
    this.root.append(title);
    if (state.error) {
      const err = document.createElement("p");
      err.className = "error-banner";
      err.textContent = state.error;
      this.root.append(err);
    }
    if (state.selectedCase === null) {
      const hint = document.createElement("p");
      hint.className = "empty-hint";
      hint.textContent = "Select a frame in the scatter plot.";
      this.root.append(hint);
      return;
    }
    this.root.append(this.renderAnnotation(state));
    this.root.append(this.renderFrameReport(state));
    this.root.append(this.renderCaseSummary(state));
    this.root.append(this.renderExport(state));
  }

  private renderAnnotation(state: ViewState): HTMLElement {
    const box = section("annotation-box", "Centroid annotation");
    const label = state.selectedFrame === null || state.selectedCase === null
      ? null
      : labelOf(state, state.selectedCase, state.selectedFrame);
    const info = document.createElement("p");
    info.className = "cluster-info";
    if (label === null) {
      info.textContent = "No cluster context (select a frame after clustering).";
      box.append(info);
      return box;
    }
    info.textContent = label === -1
      ? "Selected frame is noise — noise cannot be annotated."
      : `Selected frame belongs to cluster ${label}.`;
    box.append(info);
    if (label === -1) return box;

    const existing = state.annotations[String(label)];
    if (existing) {
      const current = document.createElement("blockquote");
      current.className = "annotation-current";
      current.textContent = existing.text;
      const meta = document.createElement("small");
      meta.textContent = ` — ${existing.author}, v${existing.version}`;
      current.append(meta);
      box.append(current);
    }

    const textarea = document.createElement("textarea");
    textarea.dataset.field = "annotation-text";
    textarea.value = state.annotationDraft;
    textarea.placeholder = "Expert description of this combustion mode…";
    textarea.addEventListener("input", () =>
      this.store.update({ annotationDraft: textarea.value }));
    const author = document.createElement("input");
    author.dataset.field = "annotation-author";
    author.placeholder = "author";
    author.value = "expert";
    const save = document.createElement("button");
    save.dataset.action = "save-description";
    save.textContent = "Save Description";
    save.addEventListener("click", () =>
      void this.actions.saveDescription(label, textarea.value, author.value));
    box.append(textarea, author, save);
    return box;
  }

  private renderFrameReport(state: ViewState): HTMLElement {
    const box = section("frame-report-box", "Frame description");
    if (state.selectedFrame === null) {
      box.append(hint("Select a frame to describe."));
      return box;
    }
    const report = state.frameReport;
    if (report) {
      const text = document.createElement("p");
      text.className = "report-text";
      text.textContent = report.text;
      const meta = document.createElement("small");
      meta.textContent = `${report.model_id}${report.edited ? " (edited)" : ""}`;
      box.append(text, meta);
      const editor = document.createElement("textarea");
      editor.dataset.field = "report-edit";
      editor.value = report.text;
      const saveEdit = document.createElement("button");
      saveEdit.dataset.action = "save-report-edit";
      saveEdit.textContent = "Save Edit";
      saveEdit.addEventListener("click", () =>
        void this.actions.saveReportEdit(editor.value));
      box.append(editor, saveEdit);
    } else {
      box.append(hint("No description yet."));
    }
    const generate = document.createElement("button");
    generate.dataset.action = "generate-frame-report";
    generate.textContent = "Generate Frame Description";
    generate.disabled = state.busy;
    generate.addEventListener("click", () => void this.actions.generateFrameReport());
    box.append(generate);
    return box;
  }

  private renderCaseSummary(state: ViewState): HTMLElement {
    const box = section("case-report-box", "Case summary");
    if (state.caseReport) {
      const text = document.createElement("p");
      text.className = "report-text";
      text.textContent = state.caseReport.text;
      box.append(text);
    } else {
      box.append(hint("No case summary yet."));
    }
    const generate = document.createElement("button");
    generate.dataset.action = "generate-case-summary";
    generate.textContent = "Generate Case Summary";
    generate.disabled = state.busy;
    generate.addEventListener("click", () => void this.actions.generateCaseSummary());
    box.append(generate);
    return box;
  }

  private renderExport(state: ViewState): HTMLElement {
    const box = section("export-box", "Export");
    const button = document.createElement("button");
    button.dataset.action = "export-reports";
    button.textContent = "Export Reports (JSON)";
    button.addEventListener("click", () => {
      const payload = {
        case: state.selectedCase,
        frame: state.selectedFrame,
        frame_report: state.frameReport,
        case_report: state.caseReport,
        annotations: state.annotations,
      };
      const blob = new Blob([JSON.stringify(payload, null, 2)],
                            { type: "application/json" });
      const anchor = document.createElement("a");
      anchor.href = URL.createObjectURL(blob);
      anchor.download = `${state.selectedCase ?? "report"}.json`;
      anchor.dataset.export = "reports";
      this.root.append(anchor);
      anchor.click();
    });
    box.append(button);
    return box;
  }
}

function section(className: string, heading: string): HTMLElement {
  const box = document.createElement("section");
  box.className = className;
  const h = document.createElement("h4");
  h.textContent = heading;
  box.append(h);
  return box;
}

function hint(text: string): HTMLElement {
  const p = document.createElement("p");
  p.className = "empty-hint";
  p.textContent = text;
  return p;
}
