/** Runtime validation of graph payloads before anything renders.
 *
 * The explorer accepts files and service responses from outside its own
 * bundle, so every structural assumption is checked here once; rendering
 * code can then index freely.
 */

import type { GraphNode, GraphPayload } from "./types.js";

export class SchemaError extends Error {}

function fail(message: string): never {
  throw new SchemaError(message);
}

function checkNode(value: unknown, index: number): GraphNode {
  if (typeof value !== "object" || value === null) {
    fail(`node ${index} is not an object`);
  }
  const node = value as Record<string, unknown>;
  if (typeof node.id !== "number" || !Number.isInteger(node.id)) {
    fail(`node ${index} has no integer id`);
  }
  if (node.kind !== "chunk" && node.kind !== "summary") {
    fail(`node ${index} has unknown kind ${JSON.stringify(node.kind)}`);
  }
  if (typeof node.text !== "string") {
    fail(`node ${index} has no text`);
  }
  if (!Array.isArray(node.questions)) {
    fail(`node ${index} has no questions array`);
  }
  for (const [qi, q] of node.questions.entries()) {
    const question = q as Record<string, unknown>;
    if (typeof question !== "object" || question === null ||
        typeof question.text !== "string") {
      fail(`node ${index} question ${qi} has no text`);
    }
  }
  return value as GraphNode;
}

export function validateGraph(data: unknown): GraphPayload {
  if (typeof data !== "object" || data === null) {
    fail("graph payload is not an object");
  }
  const payload = data as Record<string, unknown>;
  if (!Array.isArray(payload.nodes)) {
    fail("graph payload has no nodes array");
  }
  if (!Array.isArray(payload.S)) {
    fail("graph payload has no similarity matrix");
  }
  if (typeof payload.meta !== "object" || payload.meta === null) {
    fail("graph payload has no meta object");
  }
  const n = payload.nodes.length;
  if (n === 0) {
    fail("graph has no nodes");
  }
  const ids = new Set<number>();
  for (const [index, raw] of payload.nodes.entries()) {
    const node = checkNode(raw, index);
    if (ids.has(node.id)) {
      fail(`duplicate node id ${node.id}`);
    }
    ids.add(node.id);
  }
  if (payload.S.length !== n) {
    fail(`matrix has ${payload.S.length} rows for ${n} nodes`);
  }
  for (const [i, row] of payload.S.entries()) {
    if (!Array.isArray(row) || row.length !== n) {
      fail(`matrix row ${i} is not length ${n}`);
    }
    for (const [j, w] of row.entries()) {
      if (typeof w !== "number" || !Number.isFinite(w)) {
        fail(`matrix entry (${i}, ${j}) is not a finite number`);
      }
    }
  }
  return data as GraphPayload;
}
