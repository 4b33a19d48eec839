// Detected-marker outlines drawn over the camera preview.

import type { Draw2D } from "./chart.js";
import type { ObservationPayload } from "./types.js";

export const OUTLINE_COLOR = "#ff4fa0";

export function drawObservations(
  ctx: Draw2D,
  observations: ObservationPayload[],
  scaleX: number,
  scaleY: number,
): void {
  ctx.strokeStyle = OUTLINE_COLOR;
  ctx.lineWidth = 2;
  for (const obs of observations) {
    ctx.beginPath();
    obs.corners.forEach(([x, y], i) => {
      if (i === 0) {
        ctx.moveTo(x * scaleX, y * scaleY);
      } else {
        ctx.lineTo(x * scaleX, y * scaleY);
      }
    });
    ctx.closePath();
    ctx.stroke();
    const [cx, cy] = obs.center;
    ctx.fillStyle = OUTLINE_COLOR;
    ctx.fillRect(cx * scaleX - 2, cy * scaleY - 2, 4, 4);
  }
}
