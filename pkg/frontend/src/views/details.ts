/** Details View: scrollable chronological strip of the selected case's frame
 * images. Clicking a frame selects it everywhere; hovering shows a preview. */

import type { Store } from "../state.js";

export class DetailsView {
  private preview: HTMLElement;

  constructor(private root: HTMLElement, private store: Store) {
    this.preview = document.createElement("div");
    this.preview.className = "frame-preview";
    this.preview.style.display = "none";
    store.subscribe(() => this.render());
    this.render();
  }

  private render(): void {
    const state = this.store.getState();
    this.root.textContent = "";
    const title = document.createElement("h3");
    title.textContent = state.selectedCase
      ? `Details — ${state.selectedCase} (${state.channel})`
      : "Details";
    this.root.append(title);
    if (!state.selectedCase || state.frames.length === 0) {
      const hint = document.createElement("p");
      hint.className = "empty-hint";
      hint.textContent = "Select a case to browse its frames.";
      this.root.append(hint);
      return;
    }
    const strip = document.createElement("ol");
    strip.className = "frame-strip";
    for (const frame of state.frames) {
      const item = document.createElement("li");
      item.dataset.tIndex = String(frame.t_index);
      item.className = "frame-row";
      if (frame.t_index === state.selectedFrame) item.classList.add("selected");
      const img = document.createElement("img");
      img.src = frame.image_url;
      img.alt = `${state.selectedCase} t=${frame.t_index}`;
      img.loading = "lazy";
      const label = document.createElement("span");
      label.textContent = `t=${frame.t_index} (${frame.time_ms} ms)`;
      item.append(img, label);
      const caseId = state.selectedCase;
      item.addEventListener("click", () =>
        this.store.selectFrame(caseId, frame.t_index));
      item.addEventListener("mouseenter", () => this.showPreview(img.src, label.textContent ?? ""));
      item.addEventListener("mouseleave", () => { this.preview.style.display = "none"; });
      strip.append(item);
    }
    this.root.append(strip, this.preview);
    const selected = strip.querySelector("li.selected");
    if (selected && typeof (selected as HTMLElement).scrollIntoView === "function") {
      (selected as HTMLElement).scrollIntoView({ block: "nearest" });
    }
  }

  private showPreview(src: string, caption: string): void {
    this.preview.textContent = "";
    const img = document.createElement("img");
    img.src = src;
    const text = document.createElement("span");
    text.textContent = caption;
    this.preview.append(img, text);
    this.preview.style.display = "block";
  }
}
