/** Minimal dependency-free SVG builders for the line charts and the
 * 2-feature scatter with rule-region shading. */

import { ChartSeries, ScatterPoint, ScatterRegion } from "./viewmodel.js";

const W = 420;
const H = 180;
const PAD = 30;

function scale(v: number, lo: number, hi: number, a: number, b: number): number {
  if (hi === lo) return (a + b) / 2;
  return a + ((v - lo) / (hi - lo)) * (b - a);
}

export function lineChartSvg(series: ChartSeries): string {
  const pts = series.points.filter((p) => Number.isFinite(p.y));
  if (!pts.length) {
    return `<svg width="${W}" height="${H}"><text x="10" y="20">${series.label}: no data yet</text></svg>`;
  }
  const xs = pts.map((p) => p.x);
  const ys = pts.map((p) => p.y);
  const xlo = Math.min(...xs);
  const xhi = Math.max(...xs);
  const ylo = Math.min(0, ...ys);
  const yhi = Math.max(1, ...ys);
  const path = pts
    .map(
      (p, i) =>
        `${i === 0 ? "M" : "L"}${scale(p.x, xlo, xhi, PAD, W - 10).toFixed(1)},` +
        `${scale(p.y, ylo, yhi, H - PAD, 10).toFixed(1)}`,
    )
    .join(" ");
  const zero = scale(0, ylo, yhi, H - PAD, 10).toFixed(1);
  const last = pts[pts.length - 1];
  return (
    `<svg width="${W}" height="${H}" role="img" aria-label="${series.label}">` +
    `<text x="8" y="14" class="chart-title">${series.label} (${last.y.toFixed(3)})</text>` +
    `<line x1="${PAD}" y1="${zero}" x2="${W - 10}" y2="${zero}" class="axis"/>` +
    `<path d="${path}" fill="none" class="series"/>` +
    `</svg>`
  );
}

export function scatterSvg(points: ScatterPoint[], regions: ScatterRegion[]): string {
  const S = 420;
  const xs = points.map((p) => p.x);
  const ys = points.map((p) => p.y);
  const xlo = Math.min(...xs);
  const xhi = Math.max(...xs);
  const ylo = Math.min(...ys);
  const yhi = Math.max(...ys);
  const X = (v: number) => scale(v, xlo, xhi, 8, S - 8).toFixed(1);
  const Y = (v: number) => scale(v, ylo, yhi, S - 8, 8).toFixed(1);
  const rects = regions
    .map((r) => {
      const x = X(Math.max(r.x0, xlo));
      const y = Y(Math.min(r.y1, yhi));
      const w = (Number(X(Math.min(r.x1, xhi))) - Number(x)).toFixed(1);
      const h = (Number(Y(Math.max(r.y0, ylo))) - Number(y)).toFixed(1);
      return `<rect x="${x}" y="${y}" width="${w}" height="${h}" class="region region-${r.label}"/>`;
    })
    .join("");
  const dots = points
    .map(
      (p) =>
        `<circle cx="${X(p.x)}" cy="${Y(p.y)}" r="${p.labeled ? 4 : 2}" ` +
        `class="dot dot-${p.ruleLabel}${p.labeled ? " dot-labeled" : ""}" data-id="${p.id}"/>`,
    )
    .join("");
  return `<svg width="${S}" height="${S}" class="scatter">${rects}${dots}</svg>`;
}
