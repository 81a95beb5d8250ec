/* Geometry for right-continuous step functions. Estimates hold their value
   on [t_k, t_{k+1}), so paths move horizontally first and jump vertically at
   the next grid point; nothing here ever draws a sloped segment. */

export interface CurvePoint {
  t: number;
  est: number;
  lower: number | null;
  upper: number | null;
}

export interface XY {
  x: number;
  y: number;
}

function fmt(v: number): string {
  return String(Math.round(v * 100) / 100);
}

export function linearScale(
  d0: number,
  d1: number,
  r0: number,
  r1: number,
): (v: number) => number {
  const span = d1 - d0;
  if (span === 0) return () => (r0 + r1) / 2;
  return (v) => r0 + ((v - d0) / span) * (r1 - r0);
}

export function ticks(lo: number, hi: number, count = 5): number[] {
  if (!(hi > lo)) return [lo];
  const raw = (hi - lo) / Math.max(count, 1);
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const norm = raw / mag;
  const step = mag * (norm < 1.5 ? 1 : norm < 3.5 ? 2 : norm < 7.5 ? 5 : 10);
  const out: number[] = [];
  const eps = step * 1e-9;
  for (let v = Math.ceil(lo / step) * step; v <= hi + eps; v += step) {
    out.push(Math.abs(v) < eps ? 0 : Number(v.toPrecision(12)));
  }
  return out;
}

/* SVG path for a step curve through pixel points, horizontal-then-vertical. */
export function stepPath(points: XY[]): string {
  if (points.length === 0) return "";
  let d = `M ${fmt(points[0].x)} ${fmt(points[0].y)}`;
  for (let i = 1; i < points.length; i++) {
    if (points[i].x !== points[i - 1].x) d += ` H ${fmt(points[i].x)}`;
    if (points[i].y !== points[i - 1].y) d += ` V ${fmt(points[i].y)}`;
  }
  return d;
}

/* Closed band between the stepped upper and lower boundaries. The outline
   walks the upper boundary forward and the lower one backward, so both edges
   keep the same step semantics as the point estimate. */
export function bandPath(upper: XY[], lower: XY[]): string {
  if (upper.length === 0 || upper.length !== lower.length) return "";
  let d = `M ${fmt(upper[0].x)} ${fmt(upper[0].y)}`;
  for (let i = 1; i < upper.length; i++) {
    if (upper[i].x !== upper[i - 1].x) d += ` H ${fmt(upper[i].x)}`;
    if (upper[i].y !== upper[i - 1].y) d += ` V ${fmt(upper[i].y)}`;
  }
  const last = lower.length - 1;
  d += ` V ${fmt(lower[last].y)}`;
  for (let i = last - 1; i >= 0; i--) {
    if (lower[i].y !== lower[i + 1].y) d += ` V ${fmt(lower[i].y)}`;
    if (lower[i].x !== lower[i + 1].x) d += ` H ${fmt(lower[i].x)}`;
  }
  return d + " Z";
}

export function hasBand(points: CurvePoint[]): boolean {
  return points.some((p) => p.lower !== null && p.upper !== null);
}
