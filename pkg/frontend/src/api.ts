import type { SnapshotPayload, StateSummary } from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly code: string,
    message: string,
    public readonly status: number,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function parseOrThrow(resp: Response): Promise<any> {
  let body: any = null;
  try {
    body = await resp.json();
  } catch {
    body = null;
  }
  if (!resp.ok) {
    const code = body?.code ?? "bad_request";
    const message = body?.message ?? `HTTP ${resp.status}`;
    throw new ApiError(code, message, resp.status);
  }
  return body;
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  async createSession(calibration?: object): Promise<string> {
    const resp = await this.fetchImpl(`${this.baseUrl}/sessions`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(calibration ?? {}),
    });
    const body = await parseOrThrow(resp);
    return body.session_id as string;
  }

  async postFrame(sessionId: string, png: Blob | ArrayBuffer): Promise<StateSummary> {
    const resp = await this.fetchImpl(`${this.baseUrl}/sessions/${sessionId}/frames`, {
      method: "POST",
      headers: { "Content-Type": "image/png" },
      body: png,
    });
    return parseOrThrow(resp);
  }

  async postEvent(sessionId: string, event: object): Promise<StateSummary> {
    const resp = await this.fetchImpl(`${this.baseUrl}/sessions/${sessionId}/events`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(event),
    });
    return parseOrThrow(resp);
  }

  async postScan(sessionId: string, png: Blob, nPoints?: number): Promise<StateSummary> {
    const form = new FormData();
    form.append("type", "scan_captured");
    if (nPoints !== undefined) {
      form.append("n_points", String(nPoints));
    }
    form.append("image", png, "scan.png");
    const resp = await this.fetchImpl(`${this.baseUrl}/sessions/${sessionId}/events`, {
      method: "POST",
      body: form,
    });
    return parseOrThrow(resp);
  }

  async getState(sessionId: string): Promise<StateSummary> {
    const resp = await this.fetchImpl(`${this.baseUrl}/sessions/${sessionId}/state`);
    return parseOrThrow(resp);
  }

  async getSnapshots(sessionId: string): Promise<SnapshotPayload[]> {
    const resp = await this.fetchImpl(`${this.baseUrl}/sessions/${sessionId}/snapshots`);
    return parseOrThrow(resp);
  }

  snapshotImageUrl(sessionId: string, snapshotId: string): string {
    return `${this.baseUrl}/sessions/${sessionId}/snapshots/${snapshotId}/image`;
  }

  scanImageUrl(sessionId: string, name: string): string {
    return `${this.baseUrl}/sessions/${sessionId}/images/${name}`;
  }
}
