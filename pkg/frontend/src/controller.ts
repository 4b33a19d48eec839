// Application controller: session lifecycle, flow navigation, frame posting
// with a single in-flight request (newest pending frame wins), and event
// dispatch. Pure client logic: every displayed value comes from a service
// response. The DOM layer subscribes to view-model changes.

import { ApiClient, ApiError } from "./api.js";
import { nextColor, hitTestMark } from "./chart.js";
import type { FrameSource } from "./capture.js";
import type {
  ChartKind,
  ObservationPayload,
  SnapshotPayload,
  StateSummary,
} from "./types.js";

export interface ViewModel {
  sessionId: string | null;
  flow: "home" | "flow1" | "flow2" | "flow3";
  phase: "scanning" | "axis_config" | "authoring" | null;
  chart: StateSummary["chart"];
  savedFlag: boolean;
  observations: ObservationPayload[];
  snapshots: SnapshotPayload[];
  captureKind: "camera" | "file-drop" | "fixture" | null;
  banner: string | null;
}

type Listener = (vm: ViewModel) => void;

export class AppController {
  private vm: ViewModel = {
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
  private listeners: Listener[] = [];
  private inFlight = false;
  private pendingFrame: Blob | null = null;
  private source: FrameSource | null = null;
  private lastPostAt = 0;

  constructor(
    private readonly api: ApiClient,
    private readonly sources: FrameSource[],
    private readonly minFrameIntervalMs: number = 100, // <= 10 fps
  ) {}

  get view(): ViewModel {
    return this.vm;
  }

  onChange(listener: Listener): void {
    this.listeners.push(listener);
  }

  private update(patch: Partial<ViewModel>): void {
    this.vm = { ...this.vm, ...patch };
    for (const listener of this.listeners) {
      listener(this.vm);
    }
  }

  private applySummary(summary: StateSummary, extra: Partial<ViewModel> = {}): void {
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

  private showError(err: unknown): void {
    const message =
      err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
    this.update({ banner: message });
  }

  async init(calibration?: object): Promise<void> {
    const sessionId = await this.api.createSession(calibration);
    this.update({ sessionId, flow: "home" });
  }

  private get sessionId(): string {
    if (!this.vm.sessionId) {
      throw new Error("controller not initialized");
    }
    return this.vm.sessionId;
  }

  // -- navigation ---------------------------------------------------------

  async selectFlow(flow: "flow1" | "flow2" | "flow3", kind: ChartKind = "bar"): Promise<void> {
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
    } catch (err) {
      this.showError(err);
    }
  }

  async back(): Promise<void> {
    this.stopCapture();
    try {
      const summary = await this.api.postEvent(this.sessionId, { type: "back" });
      this.applySummary(summary, { observations: [], snapshots: [] });
    } catch (err) {
      this.showError(err);
    }
  }

  // -- capture -------------------------------------------------------------

  async startCapture(): Promise<void> {
    this.stopCapture();
    for (const source of this.sources) {
      try {
        await source.start((png) => this.frameArrived(png));
        this.source = source;
        this.update({
          captureKind: source.kind,
          banner:
            source.kind === "camera"
              ? null
              : "camera unavailable: drop frame images to update the chart",
        });
        return;
      } catch {
        continue; // camera denied -> fall through to the next source
      }
    }
    this.update({ captureKind: null, banner: "no frame source available" });
  }

  stopCapture(): void {
    this.source?.stop();
    this.source = null;
  }

  /** Drop-newest-overwrites-pending with one request in flight. */
  frameArrived(png: Blob): void {
    this.pendingFrame = png;
    void this.pumpFrames();
  }

  private async pumpFrames(): Promise<void> {
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
    } catch (err) {
      if (err instanceof ApiError && err.code === "illegal_transition") {
        this.pendingFrame = null; // racing a flow change; drop quietly
      } else {
        this.showError(err);
      }
    } finally {
      this.inFlight = false;
      if (this.pendingFrame !== null) {
        void this.pumpFrames();
      }
    }
  }

  // -- chart interactions ------------------------------------------------------

  /** Tap on the live chart: cycle the tapped mark's color. */
  async tapAt(x: number, y: number, width: number, height: number): Promise<void> {
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

  async tapColor(index: number, color: string): Promise<void> {
    try {
      const summary = await this.api.postEvent(this.sessionId, {
        type: "tap_color",
        index,
        color,
      });
      this.applySummary(summary);
    } catch (err) {
      this.showError(err);
    }
  }

  async togglePause(): Promise<void> {
    try {
      const summary = await this.api.postEvent(this.sessionId, { type: "toggle_pause" });
      this.applySummary(summary);
    } catch (err) {
      this.showError(err);
    }
  }

  async save(): Promise<void> {
    try {
      const summary = await this.api.postEvent(this.sessionId, { type: "save" });
      this.applySummary(summary);
    } catch (err) {
      this.showError(err);
    }
  }

  // -- flow 2 -----------------------------------------------------------------

  async submitScan(png: Blob): Promise<void> {
    try {
      const summary = await this.api.postScan(this.sessionId, png);
      this.applySummary(summary);
      if (summary.phase === "authoring") {
        await this.startCapture(); // pie path goes straight to authoring
      }
    } catch (err) {
      this.showError(err);
    }
  }

  async submitAxes(nPoints: number, yMax: number): Promise<void> {
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
    } catch (err) {
      this.showError(err);
    }
  }

  // -- flow 3 -----------------------------------------------------------------

  async refreshGallery(): Promise<void> {
    try {
      const snapshots = await this.api.getSnapshots(this.sessionId);
      this.update({ snapshots });
    } catch (err) {
      this.showError(err);
    }
  }

  snapshotImageUrl(snapshotId: string): string {
    return this.api.snapshotImageUrl(this.sessionId, snapshotId);
  }

  scanImageUrl(name: string): string {
    return this.api.scanImageUrl(this.sessionId, name);
  }

  dismissBanner(): void {
    this.update({ banner: null });
  }
}
