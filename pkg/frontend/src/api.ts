// Typed client for the /v1 session API. Every response body carries a
// `kind` discriminator; errors carry `error_code` and `message`.

export interface Citation {
  chunk_id: string;
  analysis_id: string;
  score: number;
  rank: number;
  text: string;
}

export interface CandidateAlternative {
  analysis_id: string;
  title: string;
  score: number;
}

export interface ConfirmationRequest {
  kind: "confirmation_request";
  analysis_id: string;
  title: string;
  abstract_excerpt: string;
  score: number;
  alternatives: CandidateAlternative[];
}

export interface AnswerPayload {
  kind: "answer";
  text: string;
  citations: Citation[];
}

export interface SessionPayload {
  kind: "session";
  session_id: string;
  phase: "fresh" | "awaiting_confirmation" | "locked";
  locked_analysis_id: string | null;
}

export interface ErrorPayload {
  kind: "error";
  error_code: string;
  message: string;
}

export type QueryOutcome = ConfirmationRequest | AnswerPayload;

export class ApiError extends Error {
  constructor(
    readonly errorCode: string,
    message: string,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (...args) => globalThis.fetch(...args),
  ) {}

  private async post<T>(path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: body === undefined ? "{}" : JSON.stringify(body),
    });
    const payload = (await response.json()) as T | ErrorPayload;
    if (!response.ok || (payload as ErrorPayload).kind === "error") {
      const err = payload as ErrorPayload;
      throw new ApiError(err.error_code ?? "http_error", err.message ?? response.statusText);
    }
    return payload as T;
  }

  createSession(): Promise<SessionPayload> {
    return this.post<SessionPayload>("/v1/sessions");
  }

  query(sessionId: string, text: string): Promise<QueryOutcome> {
    return this.post<QueryOutcome>(`/v1/sessions/${sessionId}/query`, { text });
  }

  confirm(sessionId: string, accept: boolean): Promise<SessionPayload> {
    return this.post<SessionPayload>(`/v1/sessions/${sessionId}/confirm`, { accept });
  }

  reset(sessionId: string): Promise<SessionPayload> {
    return this.post<SessionPayload>(`/v1/sessions/${sessionId}/reset`);
  }
}
