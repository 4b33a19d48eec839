// Application controller: session lifecycle, flow navigation, frame posting
// with a single in-flight request (newest pending frame wins), and event
// dispatch. Pure client logic: every displayed value comes from a service
// response. The DOM layer subscribes to view-model changes.
import { ApiError } from "./api.js";
import { nextColor, hitTestMark } from "./chart.js";
export class AppController {
    constructor(api, sources, minFrameIntervalMs = 100) {
        this.api = api;
        this.sources = sources;
        this.minFrameIntervalMs = minFrameIntervalMs;
        this.vm = {
            sessionId: null,
            flow: "home",
            phase: null,
            chart: null,
            savedFlag: false,
            observations: [],
            snapshots: [],
            captureKind: null,
            banner: null,
        };
        this.listeners = [];
        this.inFlight = false;
        this.pendingFrame = null;
        this.source = null;
        this.lastPostAt = 0;
    }
    get view() {
        return this.vm;
    }
    onChange(listener) {
        this.listeners.push(listener);
    }
    update(patch) {
        this.vm = { ...this.vm, ...patch };
        for (const listener of this.listeners) {
            listener(this.vm);
        }
    }
    applySummary(summary, extra = {}) {
        this.update({
            flow: summary.flow,
            phase: summary.phase,
            chart: summary.chart,
            savedFlag: summary.saved_flag,
            observations: summary.observations ?? this.vm.observations,
            banner: summary.chart?.error ? `chart: ${summary.chart.error}` : null,
            ...extra,
        });
    }
    showError(err) {
        const message = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
        this.update({ banner: message });
    }
    async init(calibration) {
        const sessionId = await this.api.createSession(calibration);
        this.update({ sessionId, flow: "home" });
    }
    get sessionId() {
        if (!this.vm.sessionId) {
            throw new Error("controller not initialized");
        }
        return this.vm.sessionId;
    }
    // -- navigation ---------------------------------------------------------
    async selectFlow(flow, kind = "bar") {
        try {
            const summary = await this.api.postEvent(this.sessionId, {
                type: "select_flow",
                flow,
                kind,
            });
            this.applySummary(summary, { observations: [] });
            if (flow === "flow3") {
                await this.refreshGallery();
            }
            if (flow === "flow1") {
                await this.startCapture();
            }
        }
        catch (err) {
            this.showError(err);
        }
    }
    async back() {
        this.stopCapture();
        try {
            const summary = await this.api.postEvent(this.sessionId, { type: "back" });
            this.applySummary(summary, { observations: [], snapshots: [] });
        }
        catch (err) {
            this.showError(err);
        }
    }
    // -- capture -------------------------------------------------------------
    async startCapture() {
        this.stopCapture();
        for (const source of this.sources) {
            try {
                await source.start((png) => this.frameArrived(png));
                this.source = source;
                this.update({
                    captureKind: source.kind,
                    banner: source.kind === "camera"
                        ? null
                        : "camera unavailable: drop frame images to update the chart",
                });
                return;
            }
            catch {
                continue; // camera denied -> fall through to the next source
            }
        }
        this.update({ captureKind: null, banner: "no frame source available" });
    }
    stopCapture() {
        this.source?.stop();
        this.source = null;
    }
    /** Drop-newest-overwrites-pending with one request in flight. */
    frameArrived(png) {
        this.pendingFrame = png;
        void this.pumpFrames();
    }
    async pumpFrames() {
        if (this.inFlight || this.pendingFrame === null) {
            return;
        }
        const now = Date.now();
        const since = now - this.lastPostAt;
        if (since < this.minFrameIntervalMs) {
            setTimeout(() => void this.pumpFrames(), this.minFrameIntervalMs - since);
            return;
        }
        const frame = this.pendingFrame;
        this.pendingFrame = null;
        this.inFlight = true;
        this.lastPostAt = now;
        try {
            const summary = await this.api.postFrame(this.sessionId, frame);
            this.applySummary(summary);
        }
        catch (err) {
            if (err instanceof ApiError && err.code === "illegal_transition") {
                this.pendingFrame = null; // racing a flow change; drop quietly
            }
            else {
                this.showError(err);
            }
        }
        finally {
            this.inFlight = false;
            if (this.pendingFrame !== null) {
                void this.pumpFrames();
            }
        }
    }
    // -- chart interactions ------------------------------------------------------
    /** Tap on the live chart: cycle the tapped mark's color. */
    async tapAt(x, y, width, height) {
        const chart = this.vm.chart;
        if (!chart) {
            return;
        }
        const index = hitTestMark(chart, width, height, x, y);
        if (index === null) {
            return;
        }
        await this.tapColor(index, nextColor(chart.colors[index]));
    }
    async tapColor(index, color) {
        try {
            const summary = await this.api.postEvent(this.sessionId, {
                type: "tap_color",
                index,
                color,
            });
            this.applySummary(summary);
        }
        catch (err) {
            this.showError(err);
        }
    }
    async togglePause() {
        try {
            const summary = await this.api.postEvent(this.sessionId, { type: "toggle_pause" });
            this.applySummary(summary);
        }
        catch (err) {
            this.showError(err);
        }
    }
    async save() {
        try {
            const summary = await this.api.postEvent(this.sessionId, { type: "save" });
            this.applySummary(summary);
        }
        catch (err) {
            this.showError(err);
        }
    }
    // -- flow 2 -----------------------------------------------------------------
    async submitScan(png) {
        try {
            const summary = await this.api.postScan(this.sessionId, png);
            this.applySummary(summary);
            if (summary.phase === "authoring") {
                await this.startCapture(); // pie path goes straight to authoring
            }
        }
        catch (err) {
            this.showError(err);
        }
    }
    async submitAxes(nPoints, yMax) {
        if (!(nPoints >= 1 && nPoints <= 5)) {
            this.update({ banner: "number of data points must be between 1 and 5" });
            return;
        }
        if (!(yMax > 0)) {
            this.update({ banner: "the y-axis maximum must be positive" });
            return;
        }
        try {
            const summary = await this.api.postEvent(this.sessionId, {
                type: "axes_configured",
                n_points: nPoints,
                y_max: yMax,
            });
            this.applySummary(summary);
            if (summary.phase === "authoring") {
                await this.startCapture();
            }
        }
        catch (err) {
            this.showError(err);
        }
    }
    // -- flow 3 -----------------------------------------------------------------
    async refreshGallery() {
        try {
            const snapshots = await this.api.getSnapshots(this.sessionId);
            this.update({ snapshots });
        }
        catch (err) {
            this.showError(err);
        }
    }
    snapshotImageUrl(snapshotId) {
        return this.api.snapshotImageUrl(this.sessionId, snapshotId);
    }
    scanImageUrl(name) {
        return this.api.scanImageUrl(this.sessionId, name);
    }
    dismissBanner() {
        this.update({ banner: null });
    }
}
