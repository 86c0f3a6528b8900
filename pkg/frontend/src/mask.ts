/** Editable mask raster with brush strokes and undo/redo.
 *
 * A stroke stamps filled disks along its path (interpolated so fast mouse
 * moves leave no gaps) and pushes one undo record holding the before/after
 * bytes of the touched bounding box. Undo and redo are exact byte inverses.
 */

export interface Point {
  x: number;
  y: number;
}

export type BrushMode = "paint" | "erase";

interface Patch {
  x: number;
  y: number;
  w: number;
  h: number;
  before: Uint8Array;
  after: Uint8Array;
}

export class MaskBuffer {
  readonly width: number;
  readonly height: number;
  readonly data: Uint8Array;
  private undoStack: Patch[] = [];
  private redoStack: Patch[] = [];

  constructor(width: number, height: number, data?: Uint8Array) {
    if (width <= 0 || height <= 0) throw new Error(`bad mask size ${width}x${height}`);
    if (data && data.length !== width * height) {
      throw new Error(`data length ${data.length} does not match ${width}x${height}`);
    }
    this.width = width;
    this.height = height;
    this.data = data ? data.slice() : new Uint8Array(width * height);
  }

  private stampDisk(cx: number, cy: number, radius: number, value: number): void {
    const r = Math.max(0, Math.round(radius));
    const x0 = Math.max(0, Math.round(cx) - r);
    const x1 = Math.min(this.width - 1, Math.round(cx) + r);
    const y0 = Math.max(0, Math.round(cy) - r);
    const y1 = Math.min(this.height - 1, Math.round(cy) + r);
    for (let y = y0; y <= y1; y++) {
      const dy = y - Math.round(cy);
      for (let x = x0; x <= x1; x++) {
        const dx = x - Math.round(cx);
        if (dx * dx + dy * dy <= r * r) {
          this.data[y * this.width + x] = value;
        }
      }
    }
  }

  private copyRect(x: number, y: number, w: number, h: number): Uint8Array {
    const out = new Uint8Array(w * h);
    for (let row = 0; row < h; row++) {
      out.set(this.data.subarray((y + row) * this.width + x, (y + row) * this.width + x + w), row * w);
    }
    return out;
  }

  private pasteRect(x: number, y: number, w: number, h: number, bytes: Uint8Array): void {
    for (let row = 0; row < h; row++) {
      this.data.set(bytes.subarray(row * w, (row + 1) * w), (y + row) * this.width + x);
    }
  }

  /** Apply a brush stroke. Empty paths change nothing. */
  stroke(path: Point[], mode: BrushMode, radius: number, paintValue = 255): boolean {
    if (path.length === 0) return false;
    const value = mode === "erase" ? 0 : paintValue;
    const r = Math.max(0, Math.round(radius));

    // bounding box of the whole stroke, clamped to the raster
    let minX = Infinity;
    let minY = Infinity;
    let maxX = -Infinity;
    let maxY = -Infinity;
    for (const p of path) {
      minX = Math.min(minX, Math.round(p.x) - r);
      minY = Math.min(minY, Math.round(p.y) - r);
      maxX = Math.max(maxX, Math.round(p.x) + r);
      maxY = Math.max(maxY, Math.round(p.y) + r);
    }
    const x = Math.max(0, minX);
    const y = Math.max(0, minY);
    const w = Math.min(this.width - 1, maxX) - x + 1;
    const h = Math.min(this.height - 1, maxY) - y + 1;
    if (w <= 0 || h <= 0) return false; // entirely off-raster

    const before = this.copyRect(x, y, w, h);
    this.stampDisk(path[0].x, path[0].y, r, value);
    for (let i = 1; i < path.length; i++) {
      const a = path[i - 1];
      const b = path[i];
      const steps = Math.max(1, Math.ceil(Math.hypot(b.x - a.x, b.y - a.y)));
      for (let s = 1; s <= steps; s++) {
        const t = s / steps;
        this.stampDisk(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t, r, value);
      }
    }
    const after = this.copyRect(x, y, w, h);
    let changed = false;
    for (let i = 0; i < before.length; i++) {
      if (before[i] !== after[i]) {
        changed = true;
        break;
      }
    }
    if (!changed) return false;
    this.undoStack.push({ x, y, w, h, before, after });
    this.redoStack.length = 0;
    return true;
  }

  get canUndo(): boolean {
    return this.undoStack.length > 0;
  }

  get canRedo(): boolean {
    return this.redoStack.length > 0;
  }

  undo(): boolean {
    const patch = this.undoStack.pop();
    if (!patch) return false;
    this.pasteRect(patch.x, patch.y, patch.w, patch.h, patch.before);
    this.redoStack.push(patch);
    return true;
  }

  redo(): boolean {
    const patch = this.redoStack.pop();
    if (!patch) return false;
    this.pasteRect(patch.x, patch.y, patch.w, patch.h, patch.after);
    this.undoStack.push(patch);
    return true;
  }
}
