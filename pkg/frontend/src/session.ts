import type { FrameMeta, Point } from "./geometry.js";

export interface DragPair {
  handle: Point;
  target: Point;
}

export interface TrajectoryDocument {
  format: "omnitraj/1";
  W: number;
  H: number;
  L: number;
  trajectories: Point[][];
  visible: boolean[][];
  meta?: unknown;
}

/**
 * Two-click drag placement. The first click arms a handle, the second
 * completes the pair; undo removes the armed handle first, then whole
 * pairs, newest first.
 */
export class DragSession {
  pairs: DragPair[] = [];
  pending: Point | null = null;

  click(p: Point): void {
    if (this.pending === null) {
      this.pending = p;
    } else {
      this.pairs.push({ handle: this.pending, target: p });
      this.pending = null;
    }
  }

  undo(): void {
    if (this.pending !== null) {
      this.pending = null;
    } else {
      this.pairs.pop();
    }
  }

  clear(): void {
    this.pairs = [];
    this.pending = null;
  }
}

/** Serialize pairs as the drag request body the service expects. */
export function buildDragDocument(pairs: readonly DragPair[], meta: FrameMeta): string {
  return JSON.stringify({
    format: "omnidrag/1",
    W: meta.W,
    H: meta.H,
    L: meta.L,
    pairs: pairs.map((p) => ({ handle: p.handle, target: p.target })),
  });
}

/**
 * Parse an estimate/export payload. Throws on anything the drawing code
 * could not trust; coordinates pass through untouched so what is drawn
 * is exactly what the service returned.
 */
export function parseTrajectoryDocument(text: string): TrajectoryDocument {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch (err) {
    throw new Error(`response is not JSON: ${String(err)}`);
  }
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
    throw new Error("response is not a JSON object");
  }
  const d = doc as Record<string, unknown>;
  if (d.format !== "omnitraj/1") {
    throw new Error(`expected an omnitraj/1 document, got ${JSON.stringify(d.format)}`);
  }
  for (const key of ["W", "H", "L"] as const) {
    if (typeof d[key] !== "number" || !Number.isInteger(d[key])) {
      throw new Error(`header field ${key} missing or not an integer`);
    }
  }
  if (!Array.isArray(d.trajectories) || !Array.isArray(d.visible)) {
    throw new Error("trajectories/visible missing");
  }
  const L = d.L as number;
  for (const t of d.trajectories as unknown[]) {
    if (!Array.isArray(t) || t.length !== L) {
      throw new Error(`trajectory length differs from L=${L}`);
    }
    for (const p of t) {
      if (!Array.isArray(p) || p.length !== 2 || typeof p[0] !== "number" || typeof p[1] !== "number") {
        throw new Error("trajectory point is not an [x, y] pair");
      }
    }
  }
  return d as unknown as TrajectoryDocument;
}
