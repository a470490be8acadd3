// Thin fetch wrapper over the session REST endpoints.

import type { ChatMessage, CopilotAnswer, SessionInfo, TurnResult } from "./types.js";

export class ApiError extends Error {
  readonly status: number;
  readonly detail: unknown;

  constructor(status: number, detail: unknown) {
    super(`API error ${status}: ${JSON.stringify(detail)}`);
    this.status = status;
    this.detail = detail;
  }
}

async function request<T>(url: string, body?: unknown): Promise<T> {
  const resp = await fetch(url, {
    method: body === undefined ? "GET" : "POST",
    headers: body === undefined ? {} : { "Content-Type": "application/json" },
    body: body === undefined ? undefined : JSON.stringify(body),
  });
  const text = await resp.text();
  const data = text ? JSON.parse(text) : null;
  if (!resp.ok) {
    throw new ApiError(resp.status, data?.detail ?? data);
  }
  return data as T;
}

export class ApiClient {
  readonly baseUrl: string;

  constructor(baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
  }

  createSession(options: {
    topology?: string;
    human_slot?: string | null;
    seed?: number;
  } = {}): Promise<SessionInfo> {
    return request(`${this.baseUrl}/sessions`, {
      topology: options.topology ?? "Centralized",
      human_slot: options.human_slot === undefined ? "SOC Analyst" : options.human_slot,
      seed: options.seed,
    });
  }

  submitTurn(sessionId: string, procId: string): Promise<TurnResult> {
    return request(`${this.baseUrl}/sessions/${sessionId}/turn`, { proc_id: procId });
  }

  sendChat(sessionId: string, content: string): Promise<{ messages: ChatMessage[] }> {
    return request(`${this.baseUrl}/sessions/${sessionId}/chat`, { content });
  }

  askCopilot(sessionId: string, query: string): Promise<CopilotAnswer> {
    return request(`${this.baseUrl}/sessions/${sessionId}/copilot`, { query });
  }

  streamUrl(sessionId: string, lastSeq: number): string {
    const ws = this.baseUrl.replace(/^http/, "ws");
    return `${ws}/sessions/${sessionId}/stream?last_seq=${lastSeq}`;
  }
}
