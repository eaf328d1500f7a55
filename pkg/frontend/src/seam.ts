import type { Point } from "./geometry.js";

/**
 * Split a trajectory polyline into runs that never cross the longitude
 * seam. A step of more than half the frame width is a wrap, not real
 * motion, so the line breaks there; each returned run can be drawn with
 * plain moveTo/lineTo. Points are kept exactly as given.
 */
export function splitAtSeam(points: readonly Point[], w: number): Point[][] {
  const runs: Point[][] = [];
  let run: Point[] = [];
  for (const p of points) {
    const prev = run[run.length - 1];
    if (prev !== undefined && Math.abs(p[0] - prev[0]) > w / 2) {
      runs.push(run);
      run = [];
    }
    run.push(p);
  }
  if (run.length > 0) runs.push(run);
  return runs;
}
