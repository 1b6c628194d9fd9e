/** Minimal canvas line charts for the weight table and error series. */

export interface Polyline {
  points: { x: number; y: number }[];
  label: string;
}

/**
 * Scale series into pixel polylines: x spans the k range, y spans the value
 * range over all series with a small margin.  Pure, for tests.
 */
export function chartPolylines(
  ks: number[],
  seriesList: { label: string; values: number[] }[],
  width: number,
  height: number,
): Polyline[] {
  if (ks.length === 0) return [];
  const all = seriesList.flatMap((s) => s.values).filter((v) => Number.isFinite(v));
  if (all.length === 0) return [];
  let lo = Math.min(...all);
  let hi = Math.max(...all);
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const kLo = ks[0]!;
  const kHi = Math.max(ks[ks.length - 1]!, kLo + 1);
  const margin = 8;
  const sx = (k: number) => margin + ((k - kLo) / (kHi - kLo)) * (width - 2 * margin);
  const sy = (v: number) => height - margin - ((v - lo) / (hi - lo)) * (height - 2 * margin);
  return seriesList.map((s) => ({
    label: s.label,
    points: s.values.map((v, i) => ({ x: sx(ks[i]!), y: sy(v) })),
  }));
}

const PALETTE = ["#2d4739", "#b03a2e", "#2e5fb0", "#8a5a2b", "#5b2d86", "#3a7d44", "#7a8a99"];

export function drawChart(
  ctx: CanvasRenderingContext2D,
  ks: number[],
  seriesList: { label: string; values: number[] }[],
  width: number,
  height: number,
  title: string,
): void {
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#444";
  ctx.font = "12px sans-serif";
  ctx.fillText(title, 8, 14);
  const lines = chartPolylines(ks, seriesList, width, height);
  lines.forEach((poly, idx) => {
    ctx.strokeStyle = PALETTE[idx % PALETTE.length]!;
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    poly.points.forEach((p, i) => {
      if (i === 0) ctx.moveTo(p.x, p.y);
      else ctx.lineTo(p.x, p.y);
    });
    ctx.stroke();
  });
}
