// Typed client for the session service wire contract (see repo README).
// Every subject-facing payload is scanned before use: if the service ever
// leaked ground truth into a pre-completion payload, the client refuses it.

import { assertNoLabelLeak } from "./secrecy.js";

export interface TrialView {
  trial_index: number;
  image_url: string;
  progress: { answered: number; total: number };
}

export interface ResultView {
  n: number;
  k_correct: number;
  p_value: number;
  alpha: number;
  verdict: "PASSED" | "FAILED";
  caveat: string;
}

export interface SessionSummary {
  session_id: string;
  n: number;
  answered: number;
  status: "open" | "complete";
  k_correct?: number;
  p_value?: number;
  alpha?: number;
  verdict?: "PASSED" | "FAILED";
  caveat?: string;
}

export type Choice = "real" | "synthetic";

export class HttpError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    const response = await this.fetchImpl(this.baseUrl + path, init);
    const body = await response.json().catch(() => ({}));
    if (!response.ok) {
      const detail =
        typeof body === "object" && body !== null && "error" in body
          ? String((body as { error: unknown }).error)
          : response.statusText;
      throw new HttpError(response.status, detail);
    }
    return body;
  }

  async createSession(n?: number): Promise<{ session_id: string; n: number }> {
    const body = await this.request("/api/session", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(n === undefined ? {} : { n }),
    });
    assertNoLabelLeak(body);
    return body as { session_id: string; n: number };
  }

  async getTrial(sessionId: string, k: number): Promise<TrialView> {
    const body = await this.request(`/api/session/${sessionId}/trial/${k}`);
    assertNoLabelLeak(body);
    return body as TrialView;
  }

  async postResponse(sessionId: string, k: number, choice: Choice): Promise<void> {
    const body = await this.request(
      `/api/session/${sessionId}/trial/${k}/response`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ choice }),
      },
    );
    assertNoLabelLeak(body);
  }

  // Only call after the last response was accepted; the service answers 409
  // before completion and this client never probes early.
  async getResult(sessionId: string): Promise<ResultView> {
    return (await this.request(`/api/session/${sessionId}/result`)) as ResultView;
  }

  async listSessions(): Promise<SessionSummary[]> {
    const body = (await this.request("/api/sessions")) as {
      sessions: SessionSummary[];
    };
    return body.sessions;
  }
}
