import type {
  BatchAck,
  CreateSessionReply,
  DocumentReply,
  PostTestAnswer,
  PosttestReply,
  PretestReply,
  QueryReply,
  ScaffoldReply,
  VksAnswer,
} from "./types.js";

/** The service answered with an error status; `detail` is its message. */
export class ApiError extends Error {
  readonly status: number;
  readonly detail: string;

  constructor(status: number, detail: string) {
    super(`${status}: ${detail}`);
    this.name = "ApiError";
    this.status = status;
    this.detail = detail;
  }

  /** Server-side trouble is worth retrying; a 4xx never heals on its own. */
  get retryable(): boolean {
    return this.status >= 500;
  }
}

/** The request never reached the service (offline, refused, aborted). */
export class NetworkError extends Error {
  constructor(cause: unknown) {
    super(cause instanceof Error ? cause.message : String(cause));
    this.name = "NetworkError";
  }
}

export interface OutgoingEvent {
  client_seq: number;
  kind: string;
  payload: Record<string, unknown>;
  client_ts_ms: number;
}

export class SessionApi {
  constructor(private readonly baseUrl: string = "") {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    let res: Response;
    try {
      res = await fetch(this.baseUrl + path, {
        method,
        headers: body === undefined ? undefined : { "Content-Type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new NetworkError(err);
    }
    if (!res.ok) {
      let detail = res.statusText;
      try {
        const parsed = (await res.json()) as { detail?: unknown };
        if (parsed && parsed.detail !== undefined) {
          detail = typeof parsed.detail === "string" ? parsed.detail : JSON.stringify(parsed.detail);
        }
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(res.status, detail);
    }
    return (await res.json()) as T;
  }

  createSession(participantId: string, strategy?: string): Promise<CreateSessionReply> {
    const body: Record<string, unknown> = { participant_id: participantId };
    if (strategy) body["strategy"] = strategy; // default: the service draws a condition
    return this.request("POST", "/sessions", body);
  }

  submitPretest(sessionId: string, answers: VksAnswer[]): Promise<PretestReply> {
    return this.request("POST", `/sessions/${sessionId}/pretest`, { responses: answers });
  }

  query(sessionId: string, query: string): Promise<QueryReply> {
    return this.request("POST", `/sessions/${sessionId}/query`, { query });
  }

  turnPage(sessionId: string, page: number): Promise<QueryReply> {
    return this.request("POST", `/sessions/${sessionId}/query`, { page });
  }

  sendEvents(sessionId: string, events: OutgoingEvent[]): Promise<BatchAck> {
    return this.request("POST", `/sessions/${sessionId}/events`, { events });
  }

  scaffold(sessionId: string): Promise<ScaffoldReply> {
    return this.request("GET", `/sessions/${sessionId}/scaffold`);
  }

  document(sessionId: string, docId: string): Promise<DocumentReply> {
    return this.request("GET", `/sessions/${sessionId}/document?doc_id=${encodeURIComponent(docId)}`);
  }

  submitPosttest(sessionId: string, answers: PostTestAnswer[], summary: string): Promise<PosttestReply> {
    return this.request("POST", `/sessions/${sessionId}/posttest`, { responses: answers, summary });
  }

  health(): Promise<{ status: string }> {
    return this.request("GET", "/healthz");
  }
}
