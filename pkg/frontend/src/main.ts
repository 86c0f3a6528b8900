/** DOM wiring for the correction workflow. */

import { ApiClient } from "./api.js";
import { Editor, validInterval } from "./editor.js";
import { drawBoxes, maskOverlayRgba } from "./overlay.js";
import type { Point } from "./mask.js";

const api = new ApiClient("");
let editor: Editor | null = null;
let photo: HTMLImageElement | null = null;

const $ = (id: string) => document.getElementById(id)!;
const canvas = $("canvas") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;

function setStatus(text: string, isError = false): void {
  const el = $("status");
  el.textContent = text;
  el.className = isError ? "error" : "";
}

function updateButtons(): void {
  const busy = !editor || editor.pending;
  ($("commit") as HTMLButtonElement).disabled = busy;
  ($("export") as HTMLButtonElement).disabled = busy || !editor?.report;
  ($("assign") as HTMLButtonElement).disabled = busy || !editor?.report;
  ($("undo") as HTMLButtonElement).disabled = !editor?.mask.canUndo;
  ($("redo") as HTMLButtonElement).disabled = !editor?.mask.canRedo;
}

function render(): void {
  if (!editor || !photo) return;
  canvas.width = editor.mask.width;
  canvas.height = editor.mask.height;
  ctx.drawImage(photo, 0, 0);

  const overlay = document.createElement("canvas");
  overlay.width = canvas.width;
  overlay.height = canvas.height;
  const octx = overlay.getContext("2d")!;
  const imageData = octx.createImageData(canvas.width, canvas.height);
  imageData.data.set(maskOverlayRgba(editor.mask.data, canvas.width, canvas.height));
  octx.putImageData(imageData, 0, 0);
  ctx.drawImage(overlay, 0, 0);

  if (editor.report) drawBoxes(ctx, editor.report);

  const warnings = editor.report?.warnings ?? [];
  $("warnings").textContent = warnings.length ? warnings.join(" | ") : "";
  renderDepthTable();
  updateButtons();
}

function renderDepthTable(): void {
  const tbody = $("depth-rows");
  tbody.innerHTML = "";
  if (!editor) return;
  editor.intervals.forEach((iv, i) => {
    const tr = document.createElement("tr");
    const warn = editor!.depthWarnings.filter((w) => w.includes(`column ${iv.index}`)).join("; ");
    tr.innerHTML =
      `<td>${iv.index}</td>` +
      `<td><input class="from" type="number" step="0.01" value="${iv.from_m.toFixed(2)}"></td>` +
      `<td><input class="to" type="number" step="0.01" value="${iv.to_m.toFixed(2)}"></td>` +
      `<td><button>apply</button></td>` +
      `<td class="warn">${warn}</td>`;
    tr.querySelector("button")!.addEventListener("click", async () => {
      const from = parseFloat((tr.querySelector(".from") as HTMLInputElement).value);
      const to = parseFloat((tr.querySelector(".to") as HTMLInputElement).value);
      if (!validInterval(from, to)) {
        setStatus("interval must have positive length", true);
        return;
      }
      try {
        await editor!.editDepth(iv.index, from, to);
        setStatus(`updated column ${iv.index}`);
      } catch (err) {
        setStatus(String(err), true);
      }
      render();
    });
    tbody.appendChild(tr);
  });
}

async function openSession(id: string): Promise<void> {
  try {
    editor = await Editor.load(api, id);
  } catch (err) {
    setStatus(String(err), true);
    return;
  }
  photo = new Image();
  photo.src = api.imageUrl(id);
  await photo.decode();
  ($("session-id") as HTMLInputElement).value = id;
  setStatus(`session ${id}: ${editor.info.width}x${editor.info.height}`);
  render();
}

// --- brush handling -------------------------------------------------------

let path: Point[] = [];

function canvasPoint(ev: PointerEvent): Point {
  const rect = canvas.getBoundingClientRect();
  return {
    x: ((ev.clientX - rect.left) / rect.width) * canvas.width,
    y: ((ev.clientY - rect.top) / rect.height) * canvas.height,
  };
}

function brushRadius(): number {
  return parseInt(($("radius") as HTMLInputElement).value, 10);
}

function brushMode(): "paint" | "erase" {
  return ($("mode") as HTMLSelectElement).value === "erase" ? "erase" : "paint";
}

canvas.addEventListener("pointerdown", (ev) => {
  if (!editor) return;
  canvas.setPointerCapture(ev.pointerId);
  path = [canvasPoint(ev)];
});

canvas.addEventListener("pointermove", (ev) => {
  if (!editor || path.length === 0) return;
  const p = canvasPoint(ev);
  path.push(p);
  // cheap preview while the gesture is in progress
  ctx.beginPath();
  ctx.arc(p.x, p.y, brushRadius(), 0, Math.PI * 2);
  ctx.fillStyle = brushMode() === "erase" ? "rgba(255,255,255,0.5)" : "rgba(0,200,70,0.5)";
  ctx.fill();
});

canvas.addEventListener("pointerup", () => {
  if (!editor || path.length === 0) return;
  editor.stroke(path, brushMode(), brushRadius());
  path = [];
  render();
});

// --- toolbar --------------------------------------------------------------

$("create").addEventListener("click", async () => {
  const imageFile = ($("image-file") as HTMLInputElement).files?.[0];
  if (!imageFile) {
    setStatus("choose an image first", true);
    return;
  }
  const maskFile = ($("mask-file") as HTMLInputElement).files?.[0];
  try {
    const id = await api.createSession(imageFile, maskFile ?? undefined);
    await openSession(id);
  } catch (err) {
    setStatus(String(err), true);
  }
});

$("open").addEventListener("click", () => {
  const id = ($("session-id") as HTMLInputElement).value.trim();
  if (id) void openSession(id);
});

$("undo").addEventListener("click", () => {
  editor?.undo();
  render();
});

$("redo").addEventListener("click", () => {
  editor?.redo();
  render();
});

$("commit").addEventListener("click", async () => {
  if (!editor) return;
  updateButtons();
  try {
    const report = await editor.commitAndExtract();
    setStatus(`${report.kept.length} kept, ${report.dropped.length} dropped`);
  } catch (err) {
    setStatus(String(err), true);
  }
  render();
});

$("assign").addEventListener("click", async () => {
  if (!editor) return;
  const top = parseFloat(($("depth-top") as HTMLInputElement).value);
  const bottom = parseFloat(($("depth-bottom") as HTMLInputElement).value);
  if (!validInterval(top, bottom)) {
    setStatus("bottom depth must exceed top", true);
    return;
  }
  try {
    await editor.assignDepths({ top, bottom });
    setStatus(`assigned depths ${top}..${bottom} m`);
  } catch (err) {
    setStatus(String(err), true);
  }
  render();
});

$("export").addEventListener("click", () => {
  if (!editor?.report) {
    setStatus("run extraction first", true);
    return;
  }
  const a = document.createElement("a");
  a.href = api.exportUrl(editor.id);
  a.download = `${editor.id}.zip`;
  a.click();
});

updateButtons();
