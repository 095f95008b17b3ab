/** Page wiring: controls on the left, the graph canvas in the middle,
 * node details on the right. */

import { ApiClient, ApiError } from "./api.js";
import { runLayout } from "./layout.js";
import { ViewState, validateQuery } from "./state.js";
import { renderDetails, renderGraph, showBanner } from "./render.js";

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing element #${id}`);
  return found as T;
}

const baseUrlInput = el<HTMLInputElement>("base-url");
const loadButton = el<HTMLButtonElement>("load-graphs");
const graphSelect = el<HTMLSelectElement>("graph-select");
const thresholdSlider = el<HTMLInputElement>("edge-threshold");
const thresholdValue = el<HTMLSpanElement>("threshold-value");
const promptInput = el<HTMLInputElement>("prompt");
const budgetInput = el<HTMLInputElement>("budget");
const strategySelect = el<HTMLSelectElement>("strategy");
const retrieveButton = el<HTMLButtonElement>("retrieve");
const askButton = el<HTMLButtonElement>("ask");
const banner = el<HTMLDivElement>("banner");
const answerPanel = el<HTMLDivElement>("answer");
const detailsPanel = el<HTMLDivElement>("details");
const svg = document.getElementById("canvas") as unknown as SVGSVGElement;

const state = new ViewState();
let client = new ApiClient(baseUrlInput.value);
let inFlight = false;

function redraw(): void {
  renderGraph(svg, state, Number(thresholdSlider.value), (nodeId) => {
    state.selectNode(state.selectedNode === nodeId ? null : nodeId);
    redraw();
  });
  renderDetails(detailsPanel, state);
}

function reportError(err: unknown): void {
  if (err instanceof ApiError) {
    showBanner(banner, `service error (${err.code}): ${err.message}`);
  } else {
    showBanner(banner, err instanceof Error ? err.message : String(err));
  }
}

async function loadGraphList(): Promise<void> {
  client = new ApiClient(baseUrlInput.value);
  showBanner(banner, null);
  try {
    const rows = await client.listGraphs();
    graphSelect.replaceChildren();
    for (const row of rows) {
      const option = document.createElement("option");
      option.value = row.graph_id;
      option.textContent =
        `${row.graph_id} (n=${row.n ?? "?"}, themes=${row.theme_count ?? "?"})`;
      graphSelect.appendChild(option);
    }
    if (rows.length === 0) {
      showBanner(banner, "the store has no graphs");
      return;
    }
    await loadGraph(rows[0]!.graph_id);
  } catch (err) {
    reportError(err);
  }
}

async function loadGraph(graphId: string): Promise<void> {
  showBanner(banner, null);
  answerPanel.hidden = true;
  try {
    const graph = await client.getGraph(graphId);
    state.setGraph(graphId, graph);
    state.positions = runLayout(
      graph.nodes.map((node) => node.id),
      graph.S,
      { width: svg.clientWidth || 800, height: svg.clientHeight || 600 },
    );
    redraw();
  } catch (err) {
    reportError(err);
  }
}

async function runQuery(alsoAsk: boolean): Promise<void> {
  if (inFlight) return;
  const prompt = promptInput.value;
  const budget = Number(budgetInput.value);
  const problem = validateQuery(prompt, budget);
  if (problem !== null) {
    showBanner(banner, problem);
    return;
  }
  if (state.graphId === null) {
    showBanner(banner, "load a graph first");
    return;
  }
  state.setBudget(budget);
  state.setStrategy(strategySelect.value);
  const seq = state.issueQuery(prompt);
  const request = {
    graph_id: state.graphId,
    prompt,
    budget: state.budget,
    strategy: state.strategy,
  };
  showBanner(banner, null);
  inFlight = true;
  retrieveButton.disabled = askButton.disabled = true;
  try {
    if (alsoAsk) {
      const response = await client.ask(request);
      if (state.applyRetrieval(seq, response.retrieval)) {
        answerPanel.hidden = false;
        answerPanel.textContent = response.answer;
        redraw();
      }
    } else {
      const response = await client.retrieve(request);
      if (state.applyRetrieval(seq, response)) {
        answerPanel.hidden = true;
        redraw();
      }
    }
  } catch (err) {
    // keep the previous highlights on failure
    reportError(err);
  } finally {
    inFlight = false;
    retrieveButton.disabled = askButton.disabled = false;
  }
}

loadButton.addEventListener("click", () => void loadGraphList());
graphSelect.addEventListener("change", () => void loadGraph(graphSelect.value));
thresholdSlider.addEventListener("input", () => {
  thresholdValue.textContent = Number(thresholdSlider.value).toFixed(2);
  redraw();
});
retrieveButton.addEventListener("click", () => void runQuery(false));
askButton.addEventListener("click", () => void runQuery(true));
promptInput.addEventListener("keydown", (event) => {
  if (event.key === "Enter") void runQuery(false);
});

thresholdValue.textContent = Number(thresholdSlider.value).toFixed(2);
redraw();
