/** Filtering Panel: initial-condition range inputs, the selected-cases table
 * (checkboxes, sortable columns), and the clustering parameter controls. */

import type { Store, SortColumn, ViewState } from "../state.js";
import { sortedCases } from "../state.js";

export interface FilterActions {
  applyFilters(): Promise<void>;
  drawScatter(): Promise<void>;
}

const BOUND_FIELDS = [
  { key: "pMin", label: "P min (MPa)" }, { key: "pMax", label: "P max (MPa)" },
  { key: "tMin", label: "T min (K)" }, { key: "tMax", label: "T max (K)" },
  { key: "h2oMin", label: "H2O min (%)" }, { key: "h2oMax", label: "H2O max (%)" },
] as const;

const COLUMNS: { column: SortColumn; label: string }[] = [
  { column: "case_id", label: "case" },
  { column: "P_MPa", label: "P (MPa)" },
  { column: "T_K", label: "T (K)" },
  { column: "H2O_pct", label: "H2O (%)" },
];

export class FilteringPanel {
  constructor(private root: HTMLElement, private store: Store,
              private actions: FilterActions) {
    store.subscribe(() => this.render());
    this.render();
  }

  private render(): void {
    const state = this.store.getState();
    this.root.textContent = "";
    this.root.append(
      this.renderBounds(state),
      this.renderTable(state),
      this.renderClusterControls(state),
    );
  }

  private renderBounds(state: ViewState): HTMLElement {
    const box = el("div", "filter-bounds");
    box.append(heading("Initial-condition filters"));
    for (const field of BOUND_FIELDS) {
      const label = el("label");
      label.textContent = field.label + " ";
      const input = document.createElement("input");
      input.type = "number";
      input.step = "any";
      input.dataset.bound = field.key;
      const value = state.filters[field.key];
      input.value = value === null ? "" : String(value);
      input.addEventListener("change", () => {
        const parsed = input.value.trim() === "" ? null : Number(input.value);
        this.store.update({
          filters: { ...this.store.getState().filters, [field.key]: parsed },
        });
      });
      label.append(input);
      box.append(label);
    }
    const apply = button("Apply Filters", "apply-filters",
      () => void this.actions.applyFilters());
    box.append(apply);
    return box;
  }

  private renderTable(state: ViewState): HTMLElement {
    const box = el("div", "cases-table");
    box.append(heading("Selected cases"));
    const table = document.createElement("table");
    const head = table.createTHead().insertRow();
    head.append(el("th"));
    for (const { column, label } of COLUMNS) {
      const th = el("th");
      const ascending = state.sort.column === column ? state.sort.ascending : null;
      th.textContent = label + (ascending === null ? "" : ascending ? " ▲" : " ▼");
      th.dataset.column = column;
      th.addEventListener("click", () => {
        const prev = this.store.getState().sort;
        this.store.update({
          sort: {
            column,
            ascending: prev.column === column ? !prev.ascending : true,
          },
        });
      });
      head.append(th);
    }
    const body = table.createTBody();
    for (const row of sortedCases(state)) {
      const tr = body.insertRow();
      tr.dataset.caseId = row.case_id;
      if (row.case_id === state.selectedCase) tr.classList.add("selected");
      const checkCell = tr.insertCell();
      const check = document.createElement("input");
      check.type = "checkbox";
      check.checked = state.checked.has(row.case_id);
      check.addEventListener("change", () => this.store.toggleChecked(row.case_id));
      checkCell.append(check);
      const cells = [row.case_id, fmt(row.params.P_MPa), fmt(row.params.T_K),
                     fmt(row.params.H2O_pct)];
      for (const text of cells) {
        const td = tr.insertCell();
        td.textContent = text;
      }
      tr.addEventListener("click", (event) => {
        if ((event.target as HTMLElement).tagName !== "INPUT") {
          this.store.selectCase(row.case_id);
        }
      });
    }
    box.append(table);
    return box;
  }

  private renderClusterControls(state: ViewState): HTMLElement {
    const box = el("div", "cluster-controls");
    box.append(heading("Clustering parameters"));

    const channel = document.createElement("select");
    channel.dataset.control = "channel";
    for (const name of state.channels) {
      const option = document.createElement("option");
      option.value = name;
      option.textContent = name;
      option.selected = name === state.channel;
      channel.append(option);
    }
    channel.addEventListener("change", () => this.store.update({ channel: channel.value }));
    box.append(labelled("channel", channel));

    const eps = numberInput("eps", state.eps, (v) => this.store.update({ eps: v }));
    const minSamples = numberInput("minSamples", state.minSamples,
      (v) => this.store.update({ minSamples: Math.round(v) }));
    box.append(labelled("eps", eps), labelled("minSamples", minSamples));

    const draw = button("Draw Scatter Plot", "draw-scatter",
      () => void this.actions.drawScatter());
    draw.disabled = state.checked.size === 0 || state.busy;
    box.append(draw);
    if (state.jobStatus) {
      const status = el("span", "job-status");
      status.textContent = state.jobStatus;
      box.append(status);
    }
    return box;
  }
}

function fmt(value: number): string {
  return Number.isInteger(value) ? String(value) : value.toPrecision(4);
}

function el(tag: string, className?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  return node;
}

function heading(text: string): HTMLElement {
  const h = el("h3");
  h.textContent = text;
  return h;
}

function labelled(text: string, input: HTMLElement): HTMLElement {
  const label = el("label");
  label.textContent = text + " ";
  label.append(input);
  return label;
}

function numberInput(name: string, value: number,
                     onChange: (v: number) => void): HTMLInputElement {
  const input = document.createElement("input");
  input.type = "number";
  input.step = "any";
  input.dataset.control = name;
  input.value = String(value);
  input.addEventListener("change", () => {
    const parsed = Number(input.value);
    if (!Number.isNaN(parsed)) onChange(parsed);
  });
  return input;
}

function button(text: string, action: string, onClick: () => void): HTMLButtonElement {
  const node = document.createElement("button");
  node.textContent = text;
  node.dataset.action = action;
  node.addEventListener("click", onClick);
  return node;
}
