/** Mask and bounding-box rendering helpers.
 *
 * The mask paints as translucent green over the photo. Kept boxes draw
 * solid, dropped boxes dashed with the name of the filter that rejected
 * them. Drawing goes through the narrow Ctx interface so tests can record
 * calls without a real canvas.
 */

import type { Report } from "./api.js";

export const OVERLAY_RGB: [number, number, number] = [0, 200, 70];
export const OVERLAY_ALPHA = 102; // 40% of 255

/** RGBA bytes for the overlay layer: green where the mask is set. */
export function maskOverlayRgba(mask: Uint8Array, width: number, height: number): Uint8ClampedArray {
  if (mask.length !== width * height) {
    throw new Error(`mask length ${mask.length} does not match ${width}x${height}`);
  }
  const rgba = new Uint8ClampedArray(width * height * 4);
  for (let i = 0; i < mask.length; i++) {
    if (mask[i] !== 0) {
      rgba[i * 4] = OVERLAY_RGB[0];
      rgba[i * 4 + 1] = OVERLAY_RGB[1];
      rgba[i * 4 + 2] = OVERLAY_RGB[2];
      rgba[i * 4 + 3] = OVERLAY_ALPHA;
    }
  }
  return rgba;
}

export interface Ctx {
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  setLineDash(segments: number[]): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
}

export const KEPT_COLOR = "#2f9e44";
export const DROPPED_COLOR = "#e8590c";

export function drawBoxes(ctx: Ctx, report: Report): void {
  ctx.lineWidth = 2;
  ctx.font = "12px sans-serif";
  ctx.setLineDash([]);
  ctx.strokeStyle = KEPT_COLOR;
  for (const box of report.kept) {
    ctx.strokeRect(box.x, box.y, box.w, box.h);
  }
  ctx.setLineDash([6, 4]);
  ctx.strokeStyle = DROPPED_COLOR;
  ctx.fillStyle = DROPPED_COLOR;
  for (const dropped of report.dropped) {
    const { x, y, w, h } = dropped.box;
    ctx.strokeRect(x, y, w, h);
    ctx.fillText(dropped.filter, x + 4, Math.max(12, y - 4));
  }
  ctx.setLineDash([]);
}
