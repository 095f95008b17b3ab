/** View state: one loaded graph, one highlight set, one query in flight.
 *
 * All mutation goes through methods that preserve two invariants: the
 * highlight set always equals the node_ids of the last accepted
 * retrieval, and a retrieval is only accepted if no newer query has been
 * issued since it left (stale responses are dropped by sequence number).
 */

import type { GraphPayload, MatchedQuestion, RetrieveResponse } from "./types.js";

export interface Point {
  x: number;
  y: number;
}

export const STRATEGIES = ["gem_greedy", "gem_best_first", "embed_baseline"];

export function validateQuery(
  prompt: string,
  budget: number,
): string | null {
  if (prompt.trim() === "") return "prompt must not be empty";
  if (!Number.isInteger(budget) || budget < 1) {
    return "budget must be a whole number of nodes, at least 1";
  }
  return null;
}

export class ViewState {
  graphId: string | null = null;
  graph: GraphPayload | null = null;
  positions = new Map<number, Point>();
  selectedNode: number | null = null;
  lastQuery = "";
  highlighted: number[] = [];
  matched = new Map<number, MatchedQuestion>();
  strategy = "gem_greedy";
  budget = 4;

  private issued = 0;
  private accepted = 0;

  setGraph(graphId: string, graph: GraphPayload): void {
    this.graphId = graphId;
    this.graph = graph;
    this.positions = new Map();
    this.selectedNode = null;
    this.highlighted = [];
    this.matched = new Map();
  }

  nodeIds(): Set<number> {
    return new Set((this.graph?.nodes ?? []).map((node) => node.id));
  }

  /** Marks a query as the newest in flight and returns its sequence. */
  issueQuery(prompt: string): number {
    this.lastQuery = prompt;
    this.issued += 1;
    return this.issued;
  }

  /**
   * Applies a retrieval if it is still the newest query; returns false
   * for stale responses, which leave every field untouched. Responses
   * naming nodes outside the loaded graph are rejected as errors.
   */
  applyRetrieval(seq: number, result: RetrieveResponse): boolean {
    if (seq !== this.issued || seq <= this.accepted) return false;
    const known = this.nodeIds();
    for (const id of result.node_ids) {
      if (!known.has(id)) {
        throw new Error(`retrieval named unknown node ${id}`);
      }
    }
    this.accepted = seq;
    this.highlighted = [...result.node_ids];
    this.matched = new Map(
      result.matched_questions.map((mq) => [mq.node_id, mq]),
    );
    return true;
  }

  /** 1-based selection rank for badges, or null when not highlighted. */
  rankOf(nodeId: number): number | null {
    const index = this.highlighted.indexOf(nodeId);
    return index === -1 ? null : index + 1;
  }

  selectNode(nodeId: number | null): void {
    if (nodeId !== null && !this.nodeIds().has(nodeId)) {
      throw new Error(`unknown node ${nodeId}`);
    }
    this.selectedNode = nodeId;
  }

  setBudget(budget: number): void {
    if (!Number.isInteger(budget) || budget < 1) {
      throw new Error("budget must be >= 1");
    }
    this.budget = budget;
  }

  setStrategy(strategy: string): void {
    if (!STRATEGIES.includes(strategy)) {
      throw new Error(`unknown strategy ${strategy}`);
    }
    this.strategy = strategy;
  }
}
