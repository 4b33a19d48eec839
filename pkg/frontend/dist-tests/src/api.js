export class ApiError extends Error {
    constructor(code, message, status) {
        super(message);
        this.code = code;
        this.status = status;
    }
}
async function parseOrThrow(resp) {
    let body = null;
    try {
        body = await resp.json();
    }
    catch {
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
    constructor(baseUrl, fetchImpl = (input, init) => fetch(input, init)) {
        this.baseUrl = baseUrl;
        this.fetchImpl = fetchImpl;
    }
    async createSession(calibration) {
        const resp = await this.fetchImpl(`${this.baseUrl}/sessions`, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(calibration ?? {}),
        });
        const body = await parseOrThrow(resp);
        return body.session_id;
    }
    async postFrame(sessionId, png) {
        const resp = await this.fetchImpl(`${this.baseUrl}/sessions/${sessionId}/frames`, {
            method: "POST",
            headers: { "Content-Type": "image/png" },
            body: png,
        });
        return parseOrThrow(resp);
    }
    async postEvent(sessionId, event) {
        const resp = await this.fetchImpl(`${this.baseUrl}/sessions/${sessionId}/events`, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(event),
        });
        return parseOrThrow(resp);
    }
    async postScan(sessionId, png, nPoints) {
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
    async getState(sessionId) {
        const resp = await this.fetchImpl(`${this.baseUrl}/sessions/${sessionId}/state`);
        return parseOrThrow(resp);
    }
    async getSnapshots(sessionId) {
        const resp = await this.fetchImpl(`${this.baseUrl}/sessions/${sessionId}/snapshots`);
        return parseOrThrow(resp);
    }
    snapshotImageUrl(sessionId, snapshotId) {
        return `${this.baseUrl}/sessions/${sessionId}/snapshots/${snapshotId}/image`;
    }
    scanImageUrl(sessionId, name) {
        return `${this.baseUrl}/sessions/${sessionId}/images/${name}`;
    }
}
