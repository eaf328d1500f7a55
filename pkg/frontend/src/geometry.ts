// Pixel-space helpers for an equirectangular frame of width W and height H.
// x wraps modulo W (the longitude seam), y clamps to [0, H - 1].

export interface FrameMeta {
  W: number;
  H: number;
  L: number;
}

export type Point = [number, number];

export function wrapX(x: number, w: number): number {
  const r = x % w;
  return r < 0 ? r + w : r;
}

export function clampY(y: number, h: number): number {
  return Math.max(0, Math.min(h - 1, y));
}

/** Seam-aware horizontal difference, in (-w/2, w/2]. */
export function shortestDx(x0: number, x1: number, w: number): number {
  let d = (x1 - x0) % w;
  if (d <= -w / 2) d += w;
  if (d > w / 2) d -= w;
  return d;
}

/**
 * Map a client (CSS pixel) position inside a canvas to image pixels.
 * The canvas backing store holds the image 1:1, so only the CSS scale
 * needs undoing.
 */
export function clientToImage(
  clientX: number,
  clientY: number,
  rect: { left: number; top: number; width: number; height: number },
  canvasW: number,
  canvasH: number,
): Point {
  const x = ((clientX - rect.left) * canvasW) / rect.width;
  const y = ((clientY - rect.top) * canvasH) / rect.height;
  return [x, y];
}

/** Keep a click usable as a drag endpoint: wrap x, clamp y. */
export function snapToFrame(p: Point, meta: { W: number; H: number }): Point {
  return [wrapX(p[0], meta.W), clampY(p[1], meta.H)];
}
