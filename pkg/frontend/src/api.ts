import type { FrameMeta } from "./geometry.js";

/** Error body from the service: {"error": "...", "code": "..."}. */
export class ApiError extends Error {
  code: string | null;
  status: number;

  constructor(message: string, status: number, code: string | null = null) {
    super(message);
    this.code = code;
    this.status = status;
  }
}

async function raiseForStatus(res: Response): Promise<void> {
  if (res.ok) return;
  let message = `HTTP ${res.status}`;
  let code: string | null = null;
  try {
    const body = await res.json();
    if (body && typeof body.error === "string") message = body.error;
    if (body && typeof body.code === "string") code = body.code;
  } catch {
    // non-JSON error body, keep the status line
  }
  throw new ApiError(message, res.status, code);
}

export class Client {
  base: string;
  private inflight: AbortController | null = null;

  constructor(base = "") {
    this.base = base;
  }

  async meta(): Promise<FrameMeta> {
    const res = await fetch(this.base + "/meta");
    await raiseForStatus(res);
    return (await res.json()) as FrameMeta;
  }

  erpUrl(): string {
    return this.base + "/erp";
  }

  /**
   * POST a drag document and return the raw response text. At most one
   * estimate is in flight; a newer call aborts the older one, whose
   * promise rejects with an AbortError.
   */
  async estimate(body: string): Promise<string> {
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    try {
      const res = await fetch(this.base + "/estimate", {
        method: "POST",
        body,
        signal: controller.signal,
      });
      await raiseForStatus(res);
      return await res.text();
    } finally {
      if (this.inflight === controller) this.inflight = null;
    }
  }

  /** Persist a trajectory document server-side; returns the saved path. */
  async export(body: string): Promise<string> {
    const res = await fetch(this.base + "/export", { method: "POST", body });
    await raiseForStatus(res);
    const out = (await res.json()) as { path: string };
    return out.path;
  }
}
