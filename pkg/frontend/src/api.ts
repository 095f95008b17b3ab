/** Thin fetch client for the graph service. */

import type {
  AskResponse,
  GraphPayload,
  GraphRow,
  RetrieveRequest,
  RetrieveResponse,
} from "./types.js";
import { validateGraph } from "./schema.js";

export class ApiError extends Error {
  constructor(
    public readonly code: string,
    message: string,
    public readonly status: number,
  ) {
    super(message);
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let code = "http_error";
  let message = `${response.status} ${response.statusText}`;
  try {
    const body = (await response.json()) as {
      error?: { code?: string; message?: string };
    };
    if (body.error?.code) code = body.error.code;
    if (body.error?.message) message = body.error.message;
  } catch {
    // non-JSON error body; keep the HTTP fallback
  }
  return new ApiError(code, message, response.status);
}

export class ApiClient {
  readonly baseUrl: string;

  constructor(baseUrl: string, private readonly fetchFn: typeof fetch = fetch) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  private async get<T>(path: string): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`);
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as T;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as T;
  }

  async listGraphs(): Promise<GraphRow[]> {
    const body = await this.get<{ graphs: GraphRow[] }>("/graphs");
    return body.graphs;
  }

  async getGraph(graphId: string, vectors = false): Promise<GraphPayload> {
    const suffix = vectors ? "?vectors=true" : "";
    const body = await this.get<unknown>(
      `/graph/${encodeURIComponent(graphId)}${suffix}`,
    );
    return validateGraph(body);
  }

  retrieve(request: RetrieveRequest): Promise<RetrieveResponse> {
    return this.post<RetrieveResponse>("/retrieve", request);
  }

  ask(request: RetrieveRequest): Promise<AskResponse> {
    return this.post<AskResponse>("/ask", request);
  }
}
