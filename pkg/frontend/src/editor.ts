/** Editor session state: local mask edits, server sync, depth table.
 *
 * Strokes and undo/redo act on the local MaskBuffer immediately; the dirty
 * flag stays up until a commit uploads the mask. Server mutations are
 * serialized: while one is in flight, further commits are rejected so the
 * UI can simply disable its buttons off the `pending` flag.
 */

import type { ApiClient, DepthInterval, DepthSpec, Report, SessionInfo } from "./api.js";
import { MaskBuffer, type BrushMode, type Point } from "./mask.js";
import { decodeGrayPng, encodeGrayPng } from "./png.js";

export function validInterval(from: number, to: number): boolean {
  return Number.isFinite(from) && Number.isFinite(to) && to > from;
}

export class Editor {
  readonly info: SessionInfo;
  readonly mask: MaskBuffer;
  report: Report | null = null;
  intervals: DepthInterval[] = [];
  depthWarnings: string[] = [];
  dirty = false;
  pending = false;
  paintValue = 255;

  private constructor(
    private readonly api: ApiClient,
    info: SessionInfo,
    mask: MaskBuffer
  ) {
    this.info = info;
    this.mask = mask;
    const values = Object.values(info.labels);
    if (values.length) this.paintValue = values[0];
  }

  static async load(api: ApiClient, id: string): Promise<Editor> {
    const info = await api.sessionInfo(id);
    const png = await api.getMaskPng(id);
    const decoded = await decodeGrayPng(png);
    if (decoded.width !== info.width || decoded.height !== info.height) {
      throw new Error(`mask ${decoded.width}x${decoded.height} does not match session ${info.width}x${info.height}`);
    }
    return new Editor(api, info, new MaskBuffer(decoded.width, decoded.height, decoded.pixels));
  }

  get id(): string {
    return this.info.id;
  }

  stroke(path: Point[], mode: BrushMode, radius: number): boolean {
    const changed = this.mask.stroke(path, mode, radius, this.paintValue);
    if (changed) this.dirty = true;
    return changed;
  }

  undo(): boolean {
    const did = this.mask.undo();
    if (did) this.dirty = true;
    return did;
  }

  redo(): boolean {
    const did = this.mask.redo();
    if (did) this.dirty = true;
    return did;
  }

  private async mutate<T>(work: () => Promise<T>): Promise<T> {
    if (this.pending) throw new Error("another request is in flight");
    this.pending = true;
    try {
      return await work();
    } finally {
      this.pending = false;
    }
  }

  /** Upload the mask, then re-run extraction. */
  async commitAndExtract(config?: Record<string, unknown>): Promise<Report> {
    return this.mutate(async () => {
      const png = encodeGrayPng(this.mask.data, this.mask.width, this.mask.height);
      await this.api.putMaskPng(this.id, png);
      this.dirty = false;
      this.intervals = [];
      this.depthWarnings = [];
      this.report = await this.api.extract(this.id, config);
      return this.report;
    });
  }

  async assignDepths(spec: DepthSpec, coreAxis?: string): Promise<DepthInterval[]> {
    if (!validInterval(spec.top, spec.bottom)) {
      throw new Error(`bottom depth must exceed top (got ${spec.top}..${spec.bottom})`);
    }
    return this.mutate(async () => {
      const res = await this.api.assignDepths(this.id, spec, coreAxis);
      this.intervals = res.intervals;
      this.depthWarnings = res.warnings;
      return this.intervals;
    });
  }

  async editDepth(index: number, from: number, to: number): Promise<DepthInterval[]> {
    if (!validInterval(from, to)) {
      throw new Error(`interval must have positive length (got ${from}..${to})`);
    }
    return this.mutate(async () => {
      const res = await this.api.editDepths(this.id, [[index, from, to]]);
      this.intervals = res.intervals;
      this.depthWarnings = res.warnings;
      return this.intervals;
    });
  }

  async exportZip(): Promise<Uint8Array> {
    return this.mutate(() => this.api.exportZip(this.id));
  }
}
