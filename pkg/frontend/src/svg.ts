/** Deterministic SVG line charts: axes with nice ticks, one polyline per
 *  series, optional min-max bands and log-scaled x axis. No timestamps or
 *  randomness, so identical inputs produce identical bytes. */

import { Series } from "./series.js";

export interface ChartOptions {
  title: string;
  xLabel: string;
  yLabel: string;
  series: Series[];
  logX?: boolean;
  width?: number;
  height?: number;
}

const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const MARGIN = { top: 42, right: 24, bottom: 52, left: 64 };

function niceTicks(lo: number, hi: number, n = 5): number[] {
  if (!(hi > lo)) {
    return [lo];
  }
  const span = hi - lo;
  const step0 = span / n;
  const mag = Math.pow(10, Math.floor(Math.log10(step0)));
  const candidates = [1, 2, 2.5, 5, 10].map((m) => m * mag);
  const step = candidates.find((c) => span / c <= n) ?? candidates[candidates.length - 1];
  const first = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let v = first; v <= hi + 1e-12 * span; v += step) {
    ticks.push(Number(v.toPrecision(12)));
  }
  return ticks;
}

function fmt(v: number): string {
  if (Number.isInteger(v)) {
    return String(v);
  }
  return String(Number(v.toPrecision(6)));
}

export function renderChart(opts: ChartOptions): string {
  const width = opts.width ?? 820;
  const height = opts.height ?? 520;
  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = height - MARGIN.top - MARGIN.bottom;

  const xs = opts.series.flatMap((s) => s.points.map((p) => p.x));
  const ys = opts.series.flatMap((s) => [
    ...s.points.map((p) => p.y),
    ...(s.band ?? []).flatMap((b) => [b.lo, b.hi]),
  ]);
  if (xs.length === 0) {
    throw new Error(`figure "${opts.title}": every series is empty`);
  }
  let xLo = Math.min(...xs);
  let xHi = Math.max(...xs);
  if (opts.logX) {
    const positive = xs.filter((v) => v > 0);
    if (positive.length === 0) {
      throw new Error(`figure "${opts.title}": log x-axis needs positive values`);
    }
    xLo = Math.min(...positive);
    xHi = Math.max(...positive);
  }
  let yLo = Math.min(...ys, 0);
  let yHi = Math.max(...ys);
  if (xHi === xLo) {
    xHi = xLo + 1;
  }
  if (yHi === yLo) {
    yHi = yLo + 1;
  }

  const tx = (x: number): number => {
    const t = opts.logX
      ? (Math.log10(Math.max(x, xLo)) - Math.log10(xLo)) / (Math.log10(xHi) - Math.log10(xLo))
      : (x - xLo) / (xHi - xLo);
    return MARGIN.left + t * plotW;
  };
  const ty = (y: number): number => MARGIN.top + plotH * (1 - (y - yLo) / (yHi - yLo));

  const xTicks = opts.logX
    ? niceTicks(Math.log10(xLo), Math.log10(xHi), 5).map((e) => Math.pow(10, e))
    : niceTicks(xLo, xHi, 6);
  const yTicks = niceTicks(yLo, yHi, 6);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}" font-family="sans-serif">`,
  );
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  parts.push(
    `<text x="${width / 2}" y="24" text-anchor="middle" font-size="16">${opts.title}</text>`,
  );

  for (const t of yTicks) {
    const y = ty(t);
    parts.push(
      `<line x1="${MARGIN.left}" y1="${fmt(y)}" x2="${width - MARGIN.right}" y2="${fmt(y)}" ` +
        `stroke="#dddddd" stroke-width="1"/>`,
    );
    parts.push(
      `<text x="${MARGIN.left - 8}" y="${fmt(y + 4)}" text-anchor="end" font-size="11">${fmt(t)}</text>`,
    );
  }
  for (const t of xTicks) {
    const x = tx(t);
    parts.push(
      `<line x1="${fmt(x)}" y1="${MARGIN.top}" x2="${fmt(x)}" y2="${height - MARGIN.bottom}" ` +
        `stroke="#eeeeee" stroke-width="1"/>`,
    );
    parts.push(
      `<text x="${fmt(x)}" y="${height - MARGIN.bottom + 18}" text-anchor="middle" ` +
        `font-size="11">${fmt(t)}</text>`,
    );
  }
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" height="${plotH}" ` +
      `fill="none" stroke="#333333"/>`,
  );
  parts.push(
    `<text x="${MARGIN.left + plotW / 2}" y="${height - 14}" text-anchor="middle" ` +
      `font-size="13">${opts.xLabel}</text>`,
  );
  parts.push(
    `<text x="18" y="${MARGIN.top + plotH / 2}" text-anchor="middle" font-size="13" ` +
      `transform="rotate(-90 18 ${MARGIN.top + plotH / 2})">${opts.yLabel}</text>`,
  );

  opts.series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    if (s.band && s.band.length > 1) {
      const upper = s.band.map((b) => `${fmt(tx(b.x))},${fmt(ty(b.hi))}`);
      const lower = [...s.band].reverse().map((b) => `${fmt(tx(b.x))},${fmt(ty(b.lo))}`);
      parts.push(
        `<polygon points="${[...upper, ...lower].join(" ")}" fill="${color}" opacity="0.15"/>`,
      );
    }
    const pts = s.points.map((p) => `${fmt(tx(p.x))},${fmt(ty(p.y))}`).join(" ");
    parts.push(
      `<polyline points="${pts}" fill="none" stroke="${color}" stroke-width="2"/>`,
    );
    for (const p of s.points) {
      parts.push(
        `<circle cx="${fmt(tx(p.x))}" cy="${fmt(ty(p.y))}" r="2.5" fill="${color}"/>`,
      );
    }
    const ly = MARGIN.top + 16 + i * 18;
    const lx = width - MARGIN.right - 170;
    parts.push(
      `<line x1="${lx}" y1="${ly - 4}" x2="${lx + 26}" y2="${ly - 4}" stroke="${color}" stroke-width="2"/>`,
    );
    parts.push(`<text x="${lx + 32}" y="${ly}" font-size="12">${s.label}</text>`);
  });

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
