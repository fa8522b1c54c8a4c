/** Temporal Trajectory View: the main 2D latent scatter.
 *
 * Points are colored by cluster assignment (noise gray); the selected case's
 * frames are connected chronologically; centroids render as diamonds behind
 * a show/hide toggle. Supports wheel zoom, drag pan, hover tooltips, and
 * click-to-select-frame. The viewport resets when new scatter data arrives.
 */

import { clusterColor } from "../colors.js";
import type { Store, ViewState } from "../state.js";
import { labelOf } from "../state.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const PLOT_W = 700;
const PLOT_H = 520;
const MARGIN = 30;

interface Viewport { x: number; y: number; w: number; h: number; }

export class TrajectoryView {
  private viewport: Viewport = { x: 0, y: 0, w: PLOT_W, h: PLOT_H };
  private viewportFor: string | null = null;
  private toScreen: (x: number, y: number) => [number, number] = (x, y) => [x, y];
  private tooltip: HTMLElement;
  private dragging: { startX: number; startY: number; view: Viewport } | null = null;

  constructor(private root: HTMLElement, private store: Store) {
    this.tooltip = document.createElement("div");
    this.tooltip.className = "tooltip";
    this.tooltip.style.display = "none";
    store.subscribe(() => this.render());
    this.render();
  }

  private computeMapping(state: ViewState): void {
    const xs = state.coords.map((c) => c.x);
    const ys = state.coords.map((c) => c.y);
    const xMin = Math.min(...xs), xMax = Math.max(...xs);
    const yMin = Math.min(...ys), yMax = Math.max(...ys);
    const xSpan = xMax - xMin || 1;
    const ySpan = yMax - yMin || 1;
    this.toScreen = (x, y) => [
      MARGIN + ((x - xMin) / xSpan) * (PLOT_W - 2 * MARGIN),
      PLOT_H - MARGIN - ((y - yMin) / ySpan) * (PLOT_H - 2 * MARGIN),
    ];
  }

  private render(): void {
    const state = this.store.getState();
    this.root.textContent = "";
    const header = document.createElement("div");
    header.className = "view-header";
    const title = document.createElement("h3");
    title.textContent = "Temporal Trajectory View";
    header.append(title);

    const toggle = document.createElement("button");
    toggle.dataset.action = "toggle-centroids";
    toggle.textContent = state.showCentroids ? "Hide Centroids" : "Show Centroids";
    toggle.addEventListener("click", () =>
      this.store.update({ showCentroids: !this.store.getState().showCentroids }));
    header.append(toggle);
    this.root.append(header);

    if (state.coords.length === 0) {
      const empty = document.createElement("p");
      empty.className = "empty-hint";
      empty.textContent = "Check cases and press “Draw Scatter Plot”.";
      this.root.append(empty);
      return;
    }

    if (this.viewportFor !== state.projectionId) {
      this.viewport = { x: 0, y: 0, w: PLOT_W, h: PLOT_H };
      this.viewportFor = state.projectionId;
    }
    this.computeMapping(state);

    const svg = document.createElementNS(SVG_NS, "svg");
    svg.setAttribute("class", "scatter");
    svg.setAttribute("viewBox",
      `${this.viewport.x} ${this.viewport.y} ${this.viewport.w} ${this.viewport.h}`);
    svg.setAttribute("width", "100%");
    this.attachZoomPan(svg);

    this.drawTrajectory(svg, state);
    this.drawPoints(svg, state);
    if (state.showCentroids) this.drawCentroids(svg, state);

    this.root.append(svg, this.tooltip);
  }

  private drawPoints(svg: SVGElement, state: ViewState): void {
    for (const row of state.coords) {
      const [sx, sy] = this.toScreen(row.x, row.y);
      const circle = document.createElementNS(SVG_NS, "circle");
      const label = labelOf(state, row.case_id, row.t_index);
      circle.setAttribute("cx", String(sx));
      circle.setAttribute("cy", String(sy));
      const onSelected = row.case_id === state.selectedCase;
      circle.setAttribute("r", onSelected ? "4" : "3");
      circle.setAttribute("fill", clusterColor(label ?? -1));
      circle.setAttribute("class", "point" + (onSelected ? " on-selected-case" : ""));
      circle.dataset.caseId = row.case_id;
      circle.dataset.tIndex = String(row.t_index);
      if (onSelected && row.t_index === state.selectedFrame) {
        circle.classList.add("selected-frame");
        circle.setAttribute("stroke", "#000");
        circle.setAttribute("stroke-width", "2");
      }
      circle.addEventListener("click", () =>
        this.store.selectFrame(row.case_id, row.t_index));
      circle.addEventListener("mouseenter", (event) => {
        this.store.update({ hover: { caseId: row.case_id, tIndex: row.t_index } });
        this.showTooltip(event as MouseEvent, row.case_id, row.t_index,
                         label ?? null);
      });
      circle.addEventListener("mouseleave", () => {
        this.store.update({ hover: null });
        this.tooltip.style.display = "none";
      });
      svg.append(circle);
    }
  }

  private drawTrajectory(svg: SVGElement, state: ViewState): void {
    if (!state.selectedCase) return;
    const points = state.coords
      .filter((c) => c.case_id === state.selectedCase)
      .sort((a, b) => a.t_index - b.t_index)
      .map((c) => this.toScreen(c.x, c.y));
    if (points.length < 2) return;
    const line = document.createElementNS(SVG_NS, "polyline");
    line.setAttribute("points", points.map(([x, y]) => `${x},${y}`).join(" "));
    line.setAttribute("fill", "none");
    line.setAttribute("stroke", "#333");
    line.setAttribute("stroke-width", "1.4");
    line.setAttribute("class", "trajectory");
    svg.append(line);
  }

  private drawCentroids(svg: SVGElement, state: ViewState): void {
    if (!state.clustering) return;
    for (const centroid of state.clustering.centroids) {
      const [sx, sy] = this.toScreen(centroid.x, centroid.y);
      const size = 6;
      const diamond = document.createElementNS(SVG_NS, "path");
      diamond.setAttribute("d",
        `M ${sx} ${sy - size} L ${sx + size} ${sy} L ${sx} ${sy + size} ` +
        `L ${sx - size} ${sy} Z`);
      diamond.setAttribute("class", "centroid");
      diamond.setAttribute("fill", "#fff");
      diamond.setAttribute("stroke", "#000");
      diamond.setAttribute("stroke-width", "1.5");
      diamond.dataset.clusterId = String(centroid.cluster_id);
      diamond.addEventListener("click", () =>
        this.store.selectFrame(centroid.case_id, centroid.t_index));
      svg.append(diamond);
    }
  }

  private showTooltip(event: MouseEvent, caseId: string, tIndex: number,
                      label: number | null): void {
    this.tooltip.textContent =
      `${caseId} t=${tIndex}` + (label === null ? "" :
        label === -1 ? " (noise)" : ` (cluster ${label})`);
    this.tooltip.style.display = "block";
    this.tooltip.style.left = `${event.offsetX + 12}px`;
    this.tooltip.style.top = `${event.offsetY + 12}px`;
  }

  private attachZoomPan(svg: SVGElement): void {
    svg.addEventListener("wheel", (event) => {
      event.preventDefault();
      const factor = (event as WheelEvent).deltaY > 0 ? 1.2 : 1 / 1.2;
      const view = this.viewport;
      const cx = view.x + view.w / 2;
      const cy = view.y + view.h / 2;
      const w = Math.min(Math.max(view.w * factor, PLOT_W / 32), PLOT_W * 4);
      const h = Math.min(Math.max(view.h * factor, PLOT_H / 32), PLOT_H * 4);
      this.viewport = { x: cx - w / 2, y: cy - h / 2, w, h };
      svg.setAttribute("viewBox",
        `${this.viewport.x} ${this.viewport.y} ${this.viewport.w} ${this.viewport.h}`);
    });
    svg.addEventListener("pointerdown", (event) => {
      this.dragging = {
        startX: (event as PointerEvent).clientX,
        startY: (event as PointerEvent).clientY,
        view: { ...this.viewport },
      };
    });
    svg.addEventListener("pointermove", (event) => {
      if (!this.dragging) return;
      const scale = this.viewport.w / PLOT_W;
      const dx = ((event as PointerEvent).clientX - this.dragging.startX) * scale;
      const dy = ((event as PointerEvent).clientY - this.dragging.startY) * scale;
      this.viewport = {
        ...this.viewport,
        x: this.dragging.view.x - dx,
        y: this.dragging.view.y - dy,
      };
      svg.setAttribute("viewBox",
        `${this.viewport.x} ${this.viewport.y} ${this.viewport.w} ${this.viewport.h}`);
    });
    svg.addEventListener("pointerup", () => { this.dragging = null; });
    svg.addEventListener("pointerleave", () => { this.dragging = null; });
  }
}
