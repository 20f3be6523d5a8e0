/** Typed client for the stepping service JSON protocol.
 *
 * Every state transition round-trips through the server; nothing in the
 * browser reduces terms. A stale redex id answers 409 and is surfaced as
 * a ProtocolError so callers can refresh and re-render.
 */

export interface RedexView {
  id: string;
  rule: string;
  path: string;
  preview: string;
}

export interface TreeNode {
  kind: "par" | "signal" | "interrupt" | "run" | "unknown";
  label: string;
  span: number[];
  children: TreeNode[];
  op?: string;
  payload?: string;
  leaf?: number;
}

export interface SignatureEntry {
  op: string;
  payload: string;
}

export type AppliedEntry =
  | { type: "step"; redex: number }
  | { type: "inject"; op: string; payload: string };

export interface StateView {
  processTree: TreeNode;
  text: string;
  spans: Record<string, number[]>;
  redexes: RedexView[];
  signature: SignatureEntry[];
  stepCount: number;
  resultStatus: string[];
  processResult: string;
  applied: AppliedEntry[];
  canUndo: boolean;
}

export interface ErrorLocation {
  file?: string;
  line: number;
  col: number;
}

export class ProtocolError extends Error {
  constructor(
    readonly status: number,
    readonly kind: string,
    message: string,
    readonly location?: ErrorLocation,
  ) {
    super(message);
  }
}

/** A stale redex id: the session moved on since this menu was rendered. */
export function isStale(e: unknown): boolean {
  return e instanceof ProtocolError && e.status === 409;
}

export type Fetcher = (url: string, init?: RequestInit) => Promise<Response>;

async function decode<T>(resp: Response): Promise<T> {
  let body: unknown;
  try {
    body = await resp.json();
  } catch {
    throw new ProtocolError(resp.status, "protocol", "malformed response");
  }
  if (!resp.ok) {
    const err = (body as { error?: { kind?: string; message?: string; location?: ErrorLocation } }).error;
    throw new ProtocolError(
      resp.status,
      err?.kind ?? "protocol",
      err?.message ?? `request failed with ${resp.status}`,
      err?.location,
    );
  }
  return body as T;
}

export class StepClient {
  constructor(
    private readonly base = "",
    private readonly fetcher: Fetcher = (u, i) => fetch(u, i),
  ) {}

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.fetcher(`${this.base}/api${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    }).then((r) => decode<T>(r));
  }

  async health(): Promise<{ ok: boolean; version: string }> {
    const r = await this.fetcher(`${this.base}/api/health`);
    return decode(r);
  }

  createSession(source: string): Promise<{ sessionId: string; state: StateView }> {
    return this.post("/sessions", { source });
  }

  async state(sessionId: string): Promise<StateView> {
    const r = await this.fetcher(`${this.base}/api/sessions/${sessionId}`);
    const body = await decode<{ state: StateView }>(r);
    return body.state;
  }

  async applyStep(sessionId: string, redexId: string): Promise<StateView> {
    const body = await this.post<{ state: StateView }>(
      `/sessions/${sessionId}/step`, { redexId });
    return body.state;
  }

  async inject(sessionId: string, op: string, payload: string): Promise<StateView> {
    const body = await this.post<{ state: StateView }>(
      `/sessions/${sessionId}/interrupt`, { op, payload });
    return body.state;
  }

  async undo(sessionId: string): Promise<{ state: StateView; undone: boolean }> {
    return this.post(`/sessions/${sessionId}/undo`, {});
  }
}
