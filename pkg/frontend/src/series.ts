/** Turns the CSV tables into plottable series.
 *
 *  CDF figures read cdf.csv (one empirical step curve per policy label);
 *  edge/median-vs-delay figures read summary.csv, averaging over seeds with
 *  a min-max band. Throughputs are converted to Mbit/s, delays stay in ms.
 */

import { CsvTable, numeric, requireColumns } from "./csv.js";

export interface BandPoint {
  x: number;
  lo: number;
  hi: number;
}

export interface Series {
  label: string;
  points: { x: number; y: number }[];
  band?: BandPoint[];
}

export type LabelMap = Record<string, string>;

const MBPS = 1e6;

function relabel(label: string, map: LabelMap | undefined): string {
  return map && label in map ? map[label] : label;
}

export function buildCdfSeries(cdf: CsvTable, labels?: LabelMap): Series[] {
  requireColumns(cdf, ["policy", "throughput_bps", "cdf"], "cdf.csv");
  const byPolicy = new Map<string, { x: number; y: number }[]>();
  for (const row of cdf.rows) {
    const key = row["policy"];
    if (!byPolicy.has(key)) {
      byPolicy.set(key, []);
    }
    byPolicy.get(key)!.push({
      x: numeric(row, "throughput_bps", "cdf.csv") / MBPS,
      y: numeric(row, "cdf", "cdf.csv"),
    });
  }
  if (byPolicy.size === 0) {
    throw new Error("cdf.csv: no data rows, nothing to plot");
  }
  const series: Series[] = [];
  for (const key of [...byPolicy.keys()].sort()) {
    const points = byPolicy.get(key)!;
    points.sort((a, b) => a.x - b.x || a.y - b.y);
    series.push({ label: relabel(key, labels), points });
  }
  return series;
}

export function buildDelaySeries(
  summary: CsvTable,
  metric: "edge_bps" | "median_bps",
  labels?: LabelMap,
): Series[] {
  requireColumns(summary, ["policy", "backhaul_delay_ms", "seed", metric], "summary.csv");
  // policy -> delay -> seed samples
  const acc = new Map<string, Map<number, number[]>>();
  for (const row of summary.rows) {
    const key = row["policy"];
    const delay = numeric(row, "backhaul_delay_ms", "summary.csv");
    const value = numeric(row, metric, "summary.csv") / MBPS;
    if (!acc.has(key)) {
      acc.set(key, new Map());
    }
    const perDelay = acc.get(key)!;
    if (!perDelay.has(delay)) {
      perDelay.set(delay, []);
    }
    perDelay.get(delay)!.push(value);
  }
  if (acc.size === 0) {
    throw new Error("summary.csv: no data rows, nothing to plot");
  }
  const series: Series[] = [];
  for (const key of [...acc.keys()].sort()) {
    const perDelay = acc.get(key)!;
    const delays = [...perDelay.keys()].sort((a, b) => a - b);
    const points = delays.map((d) => {
      const vals = perDelay.get(d)!;
      return { x: d, y: vals.reduce((s, v) => s + v, 0) / vals.length };
    });
    const band = delays.map((d) => {
      const vals = perDelay.get(d)!;
      return { x: d, lo: Math.min(...vals), hi: Math.max(...vals) };
    });
    series.push({ label: relabel(key, labels), points, band });
  }
  return series;
}
