/** Wire types for the graph export schema and the service endpoints. */

export interface NodeQuestion {
  text: string;
  embedding: number[] | null;
}

export interface GraphNode {
  id: number;
  kind: "chunk" | "summary";
  text: string;
  /** chunk ordinal for chunks, theme index for summaries */
  source: number;
  base_embedding: number[] | null;
  questions: NodeQuestion[];
}

export interface ThemeMeta {
  theme_index: number;
  member_ids: number[];
  strategy: string;
}

export interface GraphMeta {
  graph_id?: string;
  n?: number;
  m?: number;
  theme_count?: number;
  distinctness?: number;
  themes?: ThemeMeta[];
  [key: string]: unknown;
}

export interface GraphPayload {
  nodes: GraphNode[];
  S: number[][];
  meta: GraphMeta;
}

export interface GraphRow {
  graph_id: string;
  n: number | null;
  m: number | null;
  theme_count: number | null;
  distinctness: number | null;
  built_at: string | null;
}

export interface MatchedQuestion {
  node_id: number;
  question: string | null;
  score: number;
}

export interface RetrieveResponse {
  node_ids: number[];
  matched_questions: MatchedQuestion[];
  scores: number[];
  strategy: string;
  trace: unknown[];
  truncated: boolean;
}

export interface AskResponse {
  answer: string;
  context: string;
  retrieval: RetrieveResponse;
}

export interface RetrieveRequest {
  graph_id: string;
  prompt: string;
  budget?: number;
  strategy?: string;
  edge_bias?: number;
}
