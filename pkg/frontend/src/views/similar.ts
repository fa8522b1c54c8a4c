/** Similar Trajectories View: six mini scatter plots of the most similar
 * cases. Each panel highlights one retrieved trajectory against the dimmed
 * background of all projected points; clicking a panel promotes its case to
 * the main view. */

import type { Store, ViewState } from "../state.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const MINI_W = 170;
const MINI_H = 130;
const PAD = 10;

export interface SimilarActions {
  promoteCase(caseId: string): Promise<void>;
}

export class SimilarTrajectoriesView {
  constructor(private root: HTMLElement, private store: Store,
              private actions: SimilarActions) {
    store.subscribe(() => this.render());
    this.render();
  }

  private render(): void {
    const state = this.store.getState();
    this.root.textContent = "";
    const title = document.createElement("h3");
    title.textContent = "Similar Trajectories";
    this.root.append(title);
    if (!state.similar || state.similar.results.length === 0) {
      const hint = document.createElement("p");
      hint.className = "empty-hint";
      hint.textContent = state.selectedCase
        ? "No similar trajectories yet."
        : "Select a case to retrieve similar trajectories.";
      this.root.append(hint);
      return;
    }
    const strip = document.createElement("div");
    strip.className = "similar-strip";
    for (const entry of state.similar.results) {
      strip.append(this.renderPanel(state, entry.case_id, entry.value,
                                    entry.points));
    }
    this.root.append(strip);
  }

  private renderPanel(state: ViewState, caseId: string, value: number,
                      points: { x: number; y: number; t_index: number }[]): HTMLElement {
    const panel = document.createElement("figure");
    panel.className = "similar-panel";
    panel.dataset.caseId = caseId;
    panel.addEventListener("click", () => void this.actions.promoteCase(caseId));

    const map = this.mapping(state);
    const svg = document.createElementNS(SVG_NS, "svg");
    svg.setAttribute("viewBox", `0 0 ${MINI_W} ${MINI_H}`);
    svg.setAttribute("width", "100%");

    // dimmed background: every projected point
    for (const row of state.coords) {
      const [sx, sy] = map(row.x, row.y);
      const dot = document.createElementNS(SVG_NS, "circle");
      dot.setAttribute("cx", String(sx));
      dot.setAttribute("cy", String(sy));
      dot.setAttribute("r", "1.2");
      dot.setAttribute("class", "background-point");
      dot.setAttribute("fill", "#d0d0d0");
      svg.append(dot);
    }
    // highlighted retrieved trajectory
    const path = points
      .slice()
      .sort((a, b) => a.t_index - b.t_index)
      .map((p) => map(p.x, p.y));
    if (path.length >= 2) {
      const line = document.createElementNS(SVG_NS, "polyline");
      line.setAttribute("points", path.map(([x, y]) => `${x},${y}`).join(" "));
      line.setAttribute("fill", "none");
      line.setAttribute("stroke", "#d62728");
      line.setAttribute("stroke-width", "1.5");
      line.setAttribute("class", "highlight");
      svg.append(line);
    }
    for (const [sx, sy] of path) {
      const dot = document.createElementNS(SVG_NS, "circle");
      dot.setAttribute("cx", String(sx));
      dot.setAttribute("cy", String(sy));
      dot.setAttribute("r", "2");
      dot.setAttribute("fill", "#d62728");
      dot.setAttribute("class", "highlight-point");
      svg.append(dot);
    }

    const caption = document.createElement("figcaption");
    caption.textContent = `${caseId} (d=${value.toPrecision(4)})`;
    panel.append(svg, caption);
    return panel;
  }

  private mapping(state: ViewState): (x: number, y: number) => [number, number] {
    const xs = state.coords.map((c) => c.x);
    const ys = state.coords.map((c) => c.y);
    const xMin = Math.min(...xs), xSpan = (Math.max(...xs) - xMin) || 1;
    const yMin = Math.min(...ys), ySpan = (Math.max(...ys) - yMin) || 1;
    return (x, y) => [
      PAD + ((x - xMin) / xSpan) * (MINI_W - 2 * PAD),
      MINI_H - PAD - ((y - yMin) / ySpan) * (MINI_H - 2 * PAD),
    ];
  }
}
