/** Typed client for the diagnosis session service. The console performs no
 * probabilistic computation: every number it shows comes from these views. */

export interface PosteriorEntry {
  state: string;
  probability: number;
}

export interface HistoryEntry {
  type_id: number;
  state: string;
  timestamp: number;
}

export interface SessionView {
  session_id: string;
  tactic: string;
  scheme: string;
  pcm: number;
  fine_posterior: PosteriorEntry[];
  coarse_posterior: PosteriorEntry[];
  /** Ratio of posterior to pre-step belief per fine class; null flags the
   * infinite case (mass appearing on a zero-belief class). */
  change_ratios: Record<string, number | null>;
  recommendation: number;
  history: HistoryEntry[];
}

export interface CreateSessionRequest {
  tactic?: string;
  scheme?: string;
  pcm?: number;
  priors?: string | Record<string, number>;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

async function parseError(response: Response): Promise<never> {
  let detail = response.statusText;
  try {
    const body = (await response.json()) as { detail?: string };
    if (body.detail) detail = body.detail;
  } catch {
    // keep the status text
  }
  throw new ApiError(response.status, detail);
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      headers: { "Content-Type": "application/json" },
      ...init,
    });
    if (!response.ok) await parseError(response);
    if (response.status === 204) return undefined as T;
    return (await response.json()) as T;
  }

  createSession(body: CreateSessionRequest = {}): Promise<SessionView> {
    return this.request("/sessions", {
      method: "POST",
      body: JSON.stringify(body),
    });
  }

  getSession(sessionId: string): Promise<SessionView> {
    return this.request(`/sessions/${sessionId}`);
  }

  answer(
    sessionId: string,
    typeId: number,
    state: string,
    whatIf = false,
  ): Promise<SessionView> {
    return this.request(`/sessions/${sessionId}/answer`, {
      method: "POST",
      body: JSON.stringify({ type_id: typeId, state, what_if: whatIf }),
    });
  }

  nextItem(sessionId: string): Promise<{ type_id: number }> {
    return this.request(`/sessions/${sessionId}/next-item`);
  }

  deleteSession(sessionId: string): Promise<void> {
    return this.request(`/sessions/${sessionId}`, { method: "DELETE" });
  }
}
