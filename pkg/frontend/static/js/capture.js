// Frame sources: device camera when available, file drop as the fallback.
// Both hand PNG blobs to a callback; the controller owns throttling.
export class CameraSource {
    constructor(fps = 8, width = 640, height = 480) {
        this.fps = fps;
        this.width = width;
        this.height = height;
        this.kind = "camera";
        this.stream = null;
        this.timer = null;
    }
    async start(onFrame) {
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
    stop() {
        if (this.timer !== null) {
            clearInterval(this.timer);
            this.timer = null;
        }
        this.stream?.getTracks().forEach((track) => track.stop());
        this.stream = null;
    }
}
export class FileDropSource {
    constructor() {
        this.kind = "file-drop";
        this.callback = null;
    }
    async start(onFrame) {
        this.callback = onFrame;
    }
    stop() {
        this.callback = null;
    }
    /** Entry point for drop/file-picker handlers (and tests). */
    push(png) {
        this.callback?.(png);
    }
}
/** Replays a fixed list of frames; used by tests and demos. */
export class FixtureSource {
    constructor(frames, intervalMs = 50) {
        this.frames = frames;
        this.intervalMs = intervalMs;
        this.kind = "fixture";
        this.timer = null;
        this.index = 0;
    }
    async start(onFrame) {
        this.timer = setInterval(() => {
            if (this.index < this.frames.length) {
                onFrame(this.frames[this.index]);
                this.index += 1;
            }
        }, this.intervalMs);
    }
    stop() {
        if (this.timer !== null) {
            clearInterval(this.timer);
            this.timer = null;
        }
    }
}
