/** Typed client for the corebox session API. */

export interface Box {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface DroppedBox {
  box: Box;
  filter: string;
  thresholds: Record<string, number>;
}

export interface Report {
  kept: Box[];
  dropped: DroppedBox[];
  warnings: string[];
  medians: Record<string, number>;
  gt: number | null;
  detected: number;
}

export interface DepthInterval {
  index: number;
  from_m: number;
  to_m: number;
}

export interface DepthResponse {
  intervals: DepthInterval[];
  warnings: string[];
}

export interface SessionInfo {
  id: string;
  width: number;
  height: number;
  labels: Record<string, number>;
  has_report: boolean;
  has_depths: boolean;
}

export interface DepthSpec {
  top: number;
  bottom: number;
  row_order?: string;
  row_direction?: string;
  mode?: string;
  column_length?: number;
}

async function fail(response: Response): Promise<never> {
  let detail = `${response.status} ${response.statusText}`;
  try {
    const body = await response.json();
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    // keep the status line
  }
  const err = new Error(detail) as Error & { status: number };
  err.status = response.status;
  throw err;
}

export class ApiClient {
  constructor(readonly base: string = "") {}

  private async checked(response: Response): Promise<Response> {
    if (!response.ok) await fail(response);
    return response;
  }

  async createSession(image: Blob, mask?: Blob, labels?: Record<string, number>): Promise<string> {
    const form = new FormData();
    form.append("image", image, "image.png");
    if (mask) form.append("mask", mask, "mask.png");
    if (labels) form.append("labels", JSON.stringify({ labels }));
    const res = await this.checked(await fetch(`${this.base}/sessions`, { method: "POST", body: form }));
    const body = await res.json();
    return body.id as string;
  }

  async sessionInfo(id: string): Promise<SessionInfo> {
    const res = await this.checked(await fetch(`${this.base}/sessions/${id}`));
    return res.json();
  }

  imageUrl(id: string): string {
    return `${this.base}/sessions/${id}/image`;
  }

  async getMaskPng(id: string): Promise<Uint8Array> {
    const res = await this.checked(await fetch(`${this.base}/sessions/${id}/mask`));
    return new Uint8Array(await res.arrayBuffer());
  }

  async putMaskPng(id: string, png: Uint8Array): Promise<void> {
    const form = new FormData();
    form.append("mask", new Blob([png as BlobPart], { type: "image/png" }), "mask.png");
    await this.checked(await fetch(`${this.base}/sessions/${id}/mask`, { method: "PUT", body: form }));
  }

  async extract(id: string, config?: Record<string, unknown>): Promise<Report> {
    const res = await this.checked(
      await fetch(`${this.base}/sessions/${id}/extract`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(config ?? null),
      })
    );
    const body = await res.json();
    return body.report as Report;
  }

  async assignDepths(id: string, spec: DepthSpec, coreAxis?: string): Promise<DepthResponse> {
    const payload: Record<string, unknown> = { spec };
    if (coreAxis) payload.core_axis = coreAxis;
    return this.putDepths(id, payload);
  }

  async editDepths(id: string, edits: [number, number, number][]): Promise<DepthResponse> {
    return this.putDepths(id, { edits });
  }

  private async putDepths(id: string, payload: Record<string, unknown>): Promise<DepthResponse> {
    const res = await this.checked(
      await fetch(`${this.base}/sessions/${id}/depths`, {
        method: "PUT",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(payload),
      })
    );
    return res.json();
  }

  exportUrl(id: string): string {
    return `${this.base}/sessions/${id}/export`;
  }

  async exportZip(id: string): Promise<Uint8Array> {
    const res = await this.checked(await fetch(this.exportUrl(id)));
    return new Uint8Array(await res.arrayBuffer());
  }
}
