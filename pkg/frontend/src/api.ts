/* Typed client for the analysis service. Every request made by the UI goes
   through this module; no other code touches the network. */

export type Kind = "survival" | "idm" | "msm";

export interface ColumnInfo {
  name: string;
  type: string;
}

export interface SessionInfo {
  session_id: string;
  kind: Kind;
  filename: string;
  columns: ColumnInfo[];
  n_rows: number;
  preview: Array<Record<string, unknown>>;
}

export interface BindResponse {
  ok: boolean;
  validation_report: Record<string, unknown>;
}

export interface Envelope {
  analysis: string;
  params: Record<string, unknown>;
  result: Record<string, unknown>;
}

export interface ErrorBody {
  error: string;
  message: string;
  detail: unknown;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: ErrorBody,
  ) {
    super(body.message);
    this.name = "ApiError";
  }
}

/* Path suffixes for the twelve analysis endpoints, keyed by analysis name. */
export const ENDPOINTS: Record<string, string> = {
  km: "km",
  ranktest: "ranktest",
  cox: "cox",
  phtest: "phtest",
  anova: "anova",
  aft: "aft",
  counts: "counts",
  msmreg: "msmreg",
  transprob: "transprob",
  cif: "cif",
  markov_local: "markov/local",
  markov_global: "markov/global",
};

export type FetchFn = (input: string, init?: RequestInit) => Promise<Response>;

export class ServiceClient {
  private fetchFn: FetchFn;

  constructor(
    private base: string = "",
    fetchFn?: FetchFn,
  ) {
    this.fetchFn = fetchFn ?? ((input, init) => globalThis.fetch(input, init));
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.base + path, init);
    let payload: unknown = null;
    try {
      payload = await resp.json();
    } catch {
      payload = null;
    }
    if (!resp.ok) {
      const body = normalizeError(resp.status, payload);
      throw new ApiError(resp.status, body);
    }
    return payload as T;
  }

  async health(): Promise<{ ok: boolean; version: string }> {
    return this.request("/health");
  }

  async createSession(file: Blob, filename: string, kind: Kind): Promise<SessionInfo> {
    const form = new FormData();
    form.append("file", file, filename);
    form.append("kind", kind);
    return this.request("/sessions", { method: "POST", body: form });
  }

  async bind(
    sessionId: string,
    mapping: Record<string, unknown>,
    kind?: Kind,
  ): Promise<BindResponse> {
    const body: Record<string, unknown> = { mapping };
    if (kind !== undefined) body.kind = kind;
    return this.request(`/sessions/${sessionId}/bind`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  async run(
    sessionId: string,
    analysis: string,
    params: Record<string, unknown>,
  ): Promise<Envelope> {
    const suffix = ENDPOINTS[analysis];
    if (suffix === undefined) throw new Error(`no endpoint for analysis ${analysis}`);
    return this.request(`/sessions/${sessionId}/${suffix}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(params),
    });
  }
}

function normalizeError(status: number, payload: unknown): ErrorBody {
  if (
    payload !== null &&
    typeof payload === "object" &&
    "error" in payload &&
    "message" in payload
  ) {
    const p = payload as Record<string, unknown>;
    return {
      error: String(p.error),
      message: String(p.message),
      detail: "detail" in p ? p.detail : null,
    };
  }
  return { error: `http_${status}`, message: `request failed with status ${status}`, detail: null };
}
