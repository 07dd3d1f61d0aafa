/** FigureSpec execution: picks the right CSV among the inputs by header,
 *  builds the series for the requested figure kind, and writes one SVG. */

import { readFileSync, writeFileSync } from "node:fs";

import { CsvTable, parseCsv } from "./csv.js";
import { LabelMap, Series, buildCdfSeries, buildDelaySeries } from "./series.js";
import { renderChart } from "./svg.js";

export type FigureKind = "cdf" | "edge_vs_delay" | "median_vs_delay";

export interface FigureSpec {
  kind: FigureKind;
  inputs: string[];
  output: string;
  labels?: LabelMap;
  logX?: boolean;
}

const KIND_COLUMNS: Record<FigureKind, string[]> = {
  cdf: ["policy", "throughput_bps", "cdf"],
  edge_vs_delay: ["policy", "backhaul_delay_ms", "edge_bps"],
  median_vs_delay: ["policy", "backhaul_delay_ms", "median_bps"],
};

function loadTables(paths: string[]): Map<string, CsvTable> {
  const tables = new Map<string, CsvTable>();
  for (const p of paths) {
    tables.set(p, parseCsv(readFileSync(p, "utf-8"), p));
  }
  return tables;
}

function pickTable(tables: Map<string, CsvTable>, kind: FigureKind): CsvTable {
  const required = KIND_COLUMNS[kind];
  for (const table of tables.values()) {
    if (required.every((c) => table.header.includes(c))) {
      return table;
    }
  }
  throw new Error(
    `no input file carries the columns needed for "${kind}" ` +
      `(${required.map((c) => `"${c}"`).join(", ")})`,
  );
}

export function buildSeries(spec: FigureSpec, tables: Map<string, CsvTable>): Series[] {
  const table = pickTable(tables, spec.kind);
  if (spec.kind === "cdf") {
    return buildCdfSeries(table, spec.labels);
  }
  const metric = spec.kind === "edge_vs_delay" ? "edge_bps" : "median_bps";
  return buildDelaySeries(table, metric, spec.labels);
}

const TITLES: Record<FigureKind, string> = {
  cdf: "Flow throughput CDF",
  edge_vs_delay: "Fifth-percentile throughput vs backhaul delay",
  median_vs_delay: "Median throughput vs backhaul delay",
};

export function render(spec: FigureSpec): string {
  const tables = loadTables(spec.inputs);
  const series = buildSeries(spec, tables);
  const isCdf = spec.kind === "cdf";
  const svg = renderChart({
    title: TITLES[spec.kind],
    xLabel: isCdf ? "throughput (Mbit/s)" : "backhaul delay (ms)",
    yLabel: isCdf ? "CDF" : "throughput (Mbit/s)",
    series,
    logX: isCdf ? spec.logX : false,
  });
  writeFileSync(spec.output, svg);
  return spec.output;
}
