/** Explorer entry point: concern tree with live propagation, comparison
 * charts with crossover markers, rule editor, simulation timeline. */

import { ApiClient } from "./api.js";
import { buildChartState, chartSvg, toggleLogScale, ChartViewState } from "./charts.js";
import { editorFromRules, toRuleSetDocument, updateThreshold, RuleEditorState } from "./rules.js";
import { SelectionStore, SelectionViewState } from "./selection.js";
import { buildTimeline, launchSimulation, timelineSvg } from "./simulation.js";
import { decodeSelection, encodeSelection } from "./url.js";
import type { ChainDoc, ModelDoc, RuleDoc, SimulationRequest } from "./types.js";

const GRID = [4, 8, 16, 32, 64, 128, 256, 384, 512];
const CODECS = ["Compression.LAME", "Compression.Vorbis", "Compression.Speex"];

const REFERENCE_WORKLOAD = {
  phases: [
    { count: 20, size: 4 },
    { count: 20, uniform: [96, 160] as [number, number] },
    { count: 100, size: 512 },
  ],
  seed: 7,
  capacity_mb: 4096,
};

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

function localChains(): ChainDoc[] {
  return CODECS.map((codec) => ({
    stages: [{ concern: "Compression", variant: codec }],
  }));
}

function remoteChains(): ChainDoc[] {
  return CODECS.map((codec) => ({
    stages: [
      { concern: "Compression", variant: codec, coupling: "output_size" },
      { concern: "Communication" },
    ],
    label: codec,
  }));
}

class ExplorerApp {
  private api = new ApiClient("");
  private store = new SelectionStore(this.api);
  private model: ModelDoc | null = null;
  private chart: ChartViewState | null = null;
  private editor: RuleEditorState = editorFromRules([]);

  async start(): Promise<void> {
    this.model = await this.api.getModel();
    this.store.subscribe((state) => {
      history.replaceState(null, "", encodeSelection(state.picks) || "#");
      this.renderSelection(state);
    });
    el("compare-local").onclick = () => void this.runComparison("local");
    el("compare-remote").onclick = () => void this.runComparison("remote");
    el("log-toggle").onclick = () => {
      if (this.chart) {
        this.chart = toggleLogScale(this.chart);
        el("chart").innerHTML = chartSvg(this.chart);
      }
    };
    el("simulate").onclick = () => void this.simulate();
    const initial = decodeSelection(location.hash);
    await this.store.setPicks(initial);
    this.renderTree();
  }

  private renderTree(): void {
    if (!this.model) return;
    const container = el("tree");
    container.innerHTML = "";
    for (const node of this.model.nodes) {
      if (node.kind === "variant-group") continue;
      const row = document.createElement("label");
      row.className = `node node-${node.kind}`;
      row.dataset.nodeId = node.id;
      const box = document.createElement("input");
      box.type = "checkbox";
      box.onchange = () => void this.store.toggle(node.id);
      row.appendChild(box);
      row.appendChild(document.createTextNode(` ${node.id}`));
      container.appendChild(row);
    }
    this.renderSelection(this.store.current);
  }

  private renderSelection(state: SelectionViewState): void {
    for (const row of Array.from(document.querySelectorAll<HTMLElement>("[data-node-id]"))) {
      const id = row.dataset.nodeId!;
      const box = row.querySelector("input")!;
      box.checked = state.selected.includes(id);
      row.classList.toggle("auto-included", state.autoIncluded.includes(id));
    }
    el("open-choices").textContent = state.openChoices.length
      ? `open choices: ${state.openChoices.join(", ")}`
      : "";
    const banner = el("conflict");
    banner.textContent = state.conflict
      ? `${state.conflict} — ${state.violations.map((v) => v.message).join("; ")}`
      : "";
    banner.hidden = !state.conflict;
  }

  private async runComparison(mode: "local" | "remote"): Promise<void> {
    const chains = mode === "local" ? localChains() : remoteChains();
    const comparison = await this.api.compare(chains, GRID);
    const partitioned = await this.api.partition(chains, GRID, mode === "remote");
    const partition = partitioned.simplified ?? partitioned.partition;
    this.chart = buildChartState(
      comparison.series, comparison.crossovers ?? [], partition,
      this.chart?.logScale ?? false);
    el("chart").innerHTML = chartSvg(this.chart);

    const guard = { storage: mode };
    const derived = await this.api.deriveRules(partition, guard);
    this.editor = editorFromRules(derived.rules);
    this.renderRuleEditor();
  }

  private renderRuleEditor(): void {
    const container = el("rules");
    container.innerHTML = "";
    for (const rule of this.editor.rules) {
      const row = document.createElement("div");
      row.className = "rule";
      const label = document.createElement("span");
      label.textContent =
        `${rule.id}: ${rule.event} ${rule.condition.op} `;
      row.appendChild(label);
      if (rule.condition.op !== "range") {
        const input = document.createElement("input");
        input.type = "number";
        input.value = String(rule.condition.threshold);
        input.onchange = () => {
          this.editor = updateThreshold(this.editor, rule.id, Number(input.value));
        };
        row.appendChild(input);
      } else {
        row.appendChild(document.createTextNode(
          `(${rule.condition.lo}, ${rule.condition.hi}]`));
      }
      row.appendChild(document.createTextNode(
        ` -> ${rule.action.target ?? rule.action.kind}`));
      container.appendChild(row);
    }
  }

  private async simulate(): Promise<void> {
    const status = el("sim-status");
    status.textContent = "running...";
    const rules: RuleDoc[] = this.editor.rules.length
      ? toRuleSetDocument(this.editor).rules
      : [];
    const request: SimulationRequest = {
      workload: REFERENCE_WORKLOAD,
      config: { selected: this.store.current.picks.length
        ? this.store.current.picks
        : ["Store.Local", "Compression.LAME"] },
      ...(rules.length ? { rules } : {}),
    };
    const outcome = await launchSimulation(this.api, request);
    if (outcome.error || !outcome.result) {
      status.textContent = `failed: ${outcome.error}`;
      return;
    }
    status.textContent = "done";
    const timeline = outcome.timeline ?? buildTimeline(outcome.result);
    el("timeline").innerHTML = timelineSvg(timeline);
    const totals = el("totals");
    totals.innerHTML = "";
    for (const [label, value] of Object.entries(timeline.totals)) {
      const row = document.createElement("tr");
      row.innerHTML = `<td>${label}</td><td data-total="${label}">${value}</td>`;
      totals.appendChild(row);
    }
  }
}

if (typeof document !== "undefined" && document.getElementById("tree")) {
  void new ExplorerApp().start();
}
