/** Typed client for the scoring service. All numbers displayed anywhere in
 * the workbench originate from these responses; the client never computes
 * a score. The fetch implementation is injectable so tests can record or
 * stub traffic. */

import {
  ApiErrorBody,
  BreakdownJson,
  FeedbackResponseJson,
  ItemDetailJson,
  ItemSummaryJson,
  SessionStateJson,
  SrgJson,
  TraceJson,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "Content-Type": "application/json" } };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchImpl(this.baseUrl + path, init);
    const payload = (await resp.json()) as T | ApiErrorBody;
    if (!resp.ok) {
      const message = (payload as ApiErrorBody).error ?? `HTTP ${resp.status}`;
      throw new ApiError(resp.status, message);
    }
    return payload as T;
  }

  listItems(): Promise<ItemSummaryJson[]> {
    return this.request("GET", "/api/items");
  }

  itemDetail(itemId: string): Promise<ItemDetailJson> {
    return this.request("GET", `/api/items/${encodeURIComponent(itemId)}`);
  }

  score(itemId: string, student: SrgJson): Promise<BreakdownJson> {
    return this.request("POST", `/api/items/${encodeURIComponent(itemId)}/score`, { student });
  }

  feedback(itemId: string, student: SrgJson, canvas: [number, number]): Promise<FeedbackResponseJson> {
    return this.request("POST", `/api/items/${encodeURIComponent(itemId)}/feedback`, {
      student,
      canvas,
    });
  }

  createSession(itemId: string, student: SrgJson, tMax?: number): Promise<SessionStateJson> {
    return this.request("POST", "/api/sessions", { item_id: itemId, student, t_max: tMax });
  }

  step(sessionId: string, student: SrgJson, iteration: number): Promise<SessionStateJson> {
    return this.request("POST", `/api/sessions/${encodeURIComponent(sessionId)}/step`, {
      student,
      iteration,
    });
  }

  trace(sessionId: string): Promise<TraceJson> {
    return this.request("GET", `/api/sessions/${encodeURIComponent(sessionId)}/trace`);
  }
}
