// Typed client for the courseqa HTTP JSON API. This is the only place the
// frontend talks to the network; everything it renders comes from these
// response payloads verbatim.

export interface VerdictSummary {
  result: string;
  confidence: number;
  accepted: boolean;
  reasoning: string;
}

export interface Source {
  chunk_id: string;
  score: number;
  doc_id?: string;
}

export interface AskResult {
  record_id: string;
  session_id: string;
  rewritten_question: string;
  answer?: string;
  rejection_message?: string;
  verdict: VerdictSummary;
  sources: Source[];
  grounded: boolean;
  timings_ms: Record<string, number>;
}

export interface HistoryRecord {
  record_id: string;
  session_id: string;
  turn_index: number;
  question: string;
  rewritten_question: string;
  answer?: string;
  rejection_message?: string;
  verdict: VerdictSummary;
  sources: Source[];
  created_at: string;
}

export interface HistoryPage {
  records: HistoryRecord[];
  limit: number;
  offset: number;
}

export interface HealthInfo {
  status: string;
  kb_digest: string;
  index_count: number;
  top_k: number;
  validation_threshold: number;
  grounding_floor: number;
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

async function parseError(resp: Response): Promise<ApiError> {
  let message = resp.statusText || `HTTP ${resp.status}`;
  try {
    const body = await resp.json();
    if (body && typeof body.error === "string") message = body.error;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(resp.status, message);
}

export class ApiClient {
  token: string | null = null;

  constructor(private readonly baseUrl: string = "") {}

  private async request<T>(path: string, init: RequestInit = {}): Promise<T> {
    const headers: Record<string, string> = {
      "Content-Type": "application/json",
      ...(init.headers as Record<string, string> | undefined),
    };
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    const resp = await fetch(this.baseUrl + path, { ...init, headers });
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as T;
  }

  async signup(login: string, password: string): Promise<{ user_id: string }> {
    return this.request("/auth/signup", {
      method: "POST",
      body: JSON.stringify({ login, password }),
    });
  }

  async login(login: string, password: string): Promise<string> {
    const body = await this.request<{ token: string; expires_at: number }>("/auth/login", {
      method: "POST",
      body: JSON.stringify({ login, password }),
    });
    this.token = body.token;
    return body.token;
  }

  async ask(question: string, sessionId: string): Promise<AskResult> {
    return this.request("/ask", {
      method: "POST",
      body: JSON.stringify({ question, session_id: sessionId }),
    });
  }

  async history(limit = 50, offset = 0): Promise<HistoryPage> {
    return this.request(`/history?limit=${limit}&offset=${offset}`);
  }

  async health(): Promise<HealthInfo> {
    return this.request("/health");
  }
}
