/** SVG and panel rendering. No state lives here; everything is redrawn
 * from the ViewState each time. */

import type { GraphNode } from "./types.js";
import type { Point, ViewState } from "./state.js";
import { edgesAbove } from "./layout.js";

const SVG_NS = "http://www.w3.org/2000/svg";

function svgElement(tag: string, attrs: Record<string, string>): SVGElement {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) {
    el.setAttribute(key, value);
  }
  return el;
}

export function renderGraph(
  svg: SVGSVGElement,
  state: ViewState,
  threshold: number,
  onNodeClick: (nodeId: number) => void,
): void {
  svg.replaceChildren();
  const graph = state.graph;
  if (!graph) return;
  const ids = graph.nodes.map((node) => node.id);

  for (const edge of edgesAbove(graph.S, threshold)) {
    const a = state.positions.get(ids[edge.i]!);
    const b = state.positions.get(ids[edge.j]!);
    if (!a || !b) continue;
    svg.appendChild(
      svgElement("line", {
        x1: String(a.x),
        y1: String(a.y),
        x2: String(b.x),
        y2: String(b.y),
        class: "edge",
        "stroke-opacity": edge.opacity.toFixed(3),
      }),
    );
  }

  for (const node of graph.nodes) {
    const at = state.positions.get(node.id);
    if (!at) continue;
    svg.appendChild(renderNode(node, at, state, onNodeClick));
  }
}

function renderNode(
  node: GraphNode,
  at: Point,
  state: ViewState,
  onNodeClick: (nodeId: number) => void,
): SVGElement {
  const group = svgElement("g", {
    class: nodeClasses(node, state),
    transform: `translate(${at.x}, ${at.y})`,
    "data-node-id": String(node.id),
  });
  // summaries are diamonds, chunks are circles
  if (node.kind === "summary") {
    group.appendChild(
      svgElement("rect", {
        x: "-11",
        y: "-11",
        width: "22",
        height: "22",
        transform: "rotate(45)",
        class: "shape",
      }),
    );
  } else {
    group.appendChild(svgElement("circle", { r: "11", class: "shape" }));
  }
  const label = svgElement("text", { class: "node-id", dy: "4" });
  label.textContent = String(node.id);
  group.appendChild(label);

  const rank = state.rankOf(node.id);
  if (rank !== null) {
    const badge = svgElement("g", {
      class: "rank-badge",
      transform: "translate(12, -12)",
    });
    badge.appendChild(svgElement("circle", { r: "8" }));
    const text = svgElement("text", { dy: "3.5" });
    text.textContent = String(rank);
    badge.appendChild(text);
    group.appendChild(badge);
  }

  group.addEventListener("click", () => onNodeClick(node.id));
  return group;
}

function nodeClasses(node: GraphNode, state: ViewState): string {
  const classes = ["node", node.kind];
  if (state.rankOf(node.id) !== null) classes.push("highlighted");
  if (state.selectedNode === node.id) classes.push("selected");
  return classes.join(" ");
}

export function renderDetails(panel: HTMLElement, state: ViewState): void {
  panel.replaceChildren();
  const graph = state.graph;
  if (!graph || state.selectedNode === null) {
    panel.textContent = "Click a node to inspect it.";
    return;
  }
  const node = graph.nodes.find((c) => c.id === state.selectedNode);
  if (!node) return;

  const title = document.createElement("h3");
  const rank = state.rankOf(node.id);
  title.textContent =
    `${node.kind} ${node.id}` + (rank !== null ? ` (rank ${rank})` : "");
  panel.appendChild(title);

  const matched = state.matched.get(node.id);
  if (matched) {
    const hit = document.createElement("p");
    hit.className = "matched";
    hit.textContent = matched.question
      ? `matched "${matched.question}" at ${matched.score.toFixed(3)}`
      : `matched by embedding at ${matched.score.toFixed(3)}`;
    panel.appendChild(hit);
  }

  const text = document.createElement("p");
  text.className = "node-text";
  text.textContent = node.text;
  panel.appendChild(text);

  if (node.questions.length > 0) {
    const heading = document.createElement("h4");
    heading.textContent = "Utility questions";
    panel.appendChild(heading);
    const list = document.createElement("ul");
    for (const question of node.questions) {
      const item = document.createElement("li");
      item.textContent = question.text;
      list.appendChild(item);
    }
    panel.appendChild(list);
  }
}

export function showBanner(banner: HTMLElement, message: string | null): void {
  if (message === null) {
    banner.hidden = true;
    banner.textContent = "";
  } else {
    banner.hidden = false;
    banner.textContent = message;
  }
}
