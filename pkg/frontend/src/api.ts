/**
 * Typed client for the session service REST API.
 *
 * Every helper resolves with parsed JSON on 2xx and rejects with an
 * ApiError carrying the HTTP status otherwise, so callers can branch
 * on conflict (409) versus not-found (404) versus outage (5xx).
 */

export interface CreateSessionRequest {
  strategy: string;
  d_prime: number;
  seed?: number;
  budget?: number;
}

export interface CreateSessionResponse {
  session_id: string;
  strategy: string;
  d_prime: number;
  seed: number;
  budget: number;
  iteration: number;
  image_url_previous: string;
  image_url_current: string;
}

export interface FeedbackRequest {
  current_won: boolean;
  iteration: number;
  decision_time_ms: number;
}

export interface FeedbackResponse {
  finished: boolean;
  iteration: number;
  next_image_url?: string;
  image_url_previous?: string;
  final_image_url?: string;
}

export interface HistoryEntry {
  iteration: number;
  current_won: boolean;
  decision_time_ms: number | null;
}

export interface SessionSnapshot {
  session_id: string;
  status: "active" | "finished";
  strategy: string;
  d_prime: number;
  seed: number;
  budget: number;
  iteration: number;
  history: HistoryEntry[];
  image_url_previous?: string;
  image_url_current?: string;
  final_image_url?: string;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

async function request<T>(
  fetchFn: FetchLike,
  url: string,
  init?: RequestInit,
): Promise<T> {
  let resp: Response;
  try {
    resp = await fetchFn(url, init);
  } catch (err) {
    throw new ApiError(0, `service unreachable: ${String(err)}`);
  }
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = (await resp.json()) as { error?: string };
      if (body.error) detail = body.error;
    } catch {
      /* non-JSON error body; keep the status text */
    }
    throw new ApiError(resp.status, detail);
  }
  return (await resp.json()) as T;
}

export class ServiceClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  /** Absolute URL for an image path returned by the service. */
  imageUrl(path: string): string {
    return path.startsWith("http") ? path : this.baseUrl + path;
  }

  createSession(req: CreateSessionRequest): Promise<CreateSessionResponse> {
    return request(this.fetchFn, `${this.baseUrl}/v1/sessions`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(req),
    });
  }

  submitFeedback(
    sessionId: string,
    req: FeedbackRequest,
  ): Promise<FeedbackResponse> {
    return request(
      this.fetchFn,
      `${this.baseUrl}/v1/sessions/${sessionId}/feedback`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(req),
      },
    );
  }

  getSession(sessionId: string): Promise<SessionSnapshot> {
    return request(
      this.fetchFn,
      `${this.baseUrl}/v1/sessions/${sessionId}`,
    );
  }
}
