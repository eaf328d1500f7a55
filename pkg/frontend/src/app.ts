import { Client, ApiError } from "./api.js";
import { clientToImage, snapToFrame } from "./geometry.js";
import type { FrameMeta, Point } from "./geometry.js";
import { splitAtSeam } from "./seam.js";
import { DragSession, buildDragDocument, parseTrajectoryDocument } from "./session.js";
import type { TrajectoryDocument } from "./session.js";

const HANDLE_COLOR = "#ffcc00";
const TARGET_COLOR = "#ff5533";
const TRAJ_COLOR = "#33ddff";

const client = new Client("");
const session = new DragSession();

let meta: FrameMeta | null = null;
let erp: HTMLImageElement | null = null;
// raw response text is kept verbatim so export re-sends exactly what
// the service produced
let lastResponseText: string | null = null;
let lastDoc: TrajectoryDocument | null = null;

const canvas = document.querySelector("canvas") as HTMLCanvasElement;
const ctx = canvas.getContext("2d") as CanvasRenderingContext2D;
const status = document.querySelector("#status") as HTMLElement;
const undoButton = document.querySelector("#undo") as HTMLButtonElement;
const clearButton = document.querySelector("#clear") as HTMLButtonElement;
const exportButton = document.querySelector("#export") as HTMLButtonElement;

function setStatus(text: string) {
  status.textContent = text;
}

function describe(): string {
  if (!meta) return "loading";
  const n = session.pairs.length;
  const armed = session.pending ? ", handle armed" : "";
  return `${meta.W}x${meta.H}, L=${meta.L}; ${n} drag${n === 1 ? "" : "s"}${armed}`;
}

function dot(p: Point, color: string, filled: boolean) {
  ctx.beginPath();
  ctx.arc(p[0], p[1], 4, 0, Math.PI * 2);
  if (filled) {
    ctx.fillStyle = color;
    ctx.fill();
  } else {
    ctx.strokeStyle = color;
    ctx.lineWidth = 2;
    ctx.stroke();
  }
}

function draw() {
  if (!erp || !meta) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.drawImage(erp, 0, 0);

  // estimated trajectories, split at the seam; vertices are the
  // service's coordinates, untouched
  if (lastDoc) {
    ctx.strokeStyle = TRAJ_COLOR;
    ctx.lineWidth = 1.5;
    for (const traj of lastDoc.trajectories) {
      for (const run of splitAtSeam(traj, meta.W)) {
        ctx.beginPath();
        const first = run[0];
        if (first === undefined) continue;
        ctx.moveTo(first[0], first[1]);
        for (const p of run.slice(1)) ctx.lineTo(p[0], p[1]);
        ctx.stroke();
      }
      const start = traj[0];
      if (start !== undefined) dot(start, TRAJ_COLOR, true);
    }
  }

  for (const pair of session.pairs) {
    dot(pair.handle, HANDLE_COLOR, true);
    dot(pair.target, TARGET_COLOR, false);
  }
  if (session.pending) dot(session.pending, HANDLE_COLOR, true);
}

async function reestimate() {
  if (!meta) return;
  if (session.pairs.length === 0) {
    lastResponseText = null;
    lastDoc = null;
    setStatus(describe());
    draw();
    return;
  }
  setStatus(describe() + "; estimating...");
  try {
    const text = await client.estimate(buildDragDocument(session.pairs, meta));
    lastResponseText = text;
    lastDoc = parseTrajectoryDocument(text);
    setStatus(describe());
  } catch (err) {
    if (err instanceof DOMException && err.name === "AbortError") return;
    const tag = err instanceof ApiError && err.code ? ` [${err.code}]` : "";
    setStatus(`estimate failed${tag}: ${err instanceof Error ? err.message : String(err)}`);
  }
  draw();
}

canvas.addEventListener("click", (e: MouseEvent) => {
  if (!meta) return;
  const rect = canvas.getBoundingClientRect();
  const p = clientToImage(e.clientX, e.clientY, rect, canvas.width, canvas.height);
  session.click(snapToFrame(p, meta));
  setStatus(describe());
  draw();
  if (session.pending === null) void reestimate();
});

undoButton.addEventListener("click", () => {
  session.undo();
  void reestimate();
});

clearButton.addEventListener("click", () => {
  session.clear();
  void reestimate();
});

exportButton.addEventListener("click", async () => {
  if (!lastResponseText) {
    setStatus("nothing to export yet");
    return;
  }
  try {
    const path = await client.export(lastResponseText);
    setStatus(`exported to ${path}`);
  } catch (err) {
    setStatus(`export failed: ${err instanceof Error ? err.message : String(err)}`);
  }
});

async function boot() {
  try {
    meta = await client.meta();
  } catch (err) {
    setStatus(`cannot reach service: ${err instanceof Error ? err.message : String(err)}`);
    return;
  }
  const img = new Image();
  img.onload = () => {
    erp = img;
    canvas.width = img.naturalWidth;
    canvas.height = img.naturalHeight;
    setStatus(describe());
    draw();
  };
  img.onerror = () => setStatus("failed to load the reference frame");
  img.src = client.erpUrl();
}

void boot();
