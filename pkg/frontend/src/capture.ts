// Frame sources: device camera when available, file drop as the fallback.
// Both hand PNG blobs to a callback; the controller owns throttling.

export type FrameCallback = (png: Blob) => void;

export interface FrameSource {
  readonly kind: "camera" | "file-drop" | "fixture";
  start(onFrame: FrameCallback): Promise<void>;
  stop(): void;
}

export class CameraSource implements FrameSource {
  readonly kind = "camera";
  private stream: MediaStream | null = null;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly fps: number = 8,
    private readonly width: number = 640,
    private readonly height: number = 480,
  ) {}

  async start(onFrame: FrameCallback): Promise<void> {
    if (typeof navigator === "undefined" || !navigator.mediaDevices?.getUserMedia) {
      throw new Error("camera unavailable");
    }
    this.stream = await navigator.mediaDevices.getUserMedia({
      video: { width: this.width, height: this.height },
    });
    const video = document.createElement("video");
    video.srcObject = this.stream;
    video.muted = true;
    await video.play();

    const canvas = document.createElement("canvas");
    canvas.width = this.width;
    canvas.height = this.height;
    const ctx = canvas.getContext("2d");
    if (!ctx) {
      throw new Error("no 2d context");
    }
    this.timer = setInterval(() => {
      ctx.drawImage(video, 0, 0, canvas.width, canvas.height);
      canvas.toBlob((blob) => {
        if (blob) {
          onFrame(blob);
        }
      }, "image/png");
    }, Math.round(1000 / this.fps));
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
    this.stream?.getTracks().forEach((track) => track.stop());
    this.stream = null;
  }
}

export class FileDropSource implements FrameSource {
  readonly kind = "file-drop";
  private callback: FrameCallback | null = null;

  async start(onFrame: FrameCallback): Promise<void> {
    this.callback = onFrame;
  }

  stop(): void {
    this.callback = null;
  }

  /** Entry point for drop/file-picker handlers (and tests). */
  push(png: Blob): void {
    this.callback?.(png);
  }
}

/** Replays a fixed list of frames; used by tests and demos. */
export class FixtureSource implements FrameSource {
  readonly kind = "fixture";
  private timer: ReturnType<typeof setInterval> | null = null;
  private index = 0;

  constructor(
    private readonly frames: Blob[],
    private readonly intervalMs: number = 50,
  ) {}

  async start(onFrame: FrameCallback): Promise<void> {
    this.timer = setInterval(() => {
      if (this.index < this.frames.length) {
        onFrame(this.frames[this.index]);
        this.index += 1;
      }
    }, this.intervalMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}
