/** Minimal CSV reader for the simulator's output schemas (no quoting,
 *  mandatory header row). */

export interface CsvTable {
  header: string[];
  rows: Record<string, string>[];
}

export function parseCsv(text: string, name: string): CsvTable {
  const lines = text.split(/\r?\n/).filter((ln) => ln.length > 0);
  if (lines.length === 0) {
    throw new Error(`${name}: empty file`);
  }
  const header = lines[0].split(",");
  const rows: Record<string, string>[] = [];
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(",");
    if (parts.length !== header.length) {
      throw new Error(`${name}: row ${i + 1} has ${parts.length} fields, expected ${header.length}`);
    }
    const row: Record<string, string> = {};
    for (let j = 0; j < header.length; j++) {
      row[header[j]] = parts[j];
    }
    rows.push(row);
  }
  return { header, rows };
}

export function requireColumns(table: CsvTable, columns: string[], name: string): void {
  for (const col of columns) {
    if (!table.header.includes(col)) {
      throw new Error(`${name}: missing column "${col}"`);
    }
  }
}

export function numeric(row: Record<string, string>, column: string, name: string): number {
  const v = Number(row[column]);
  if (!Number.isFinite(v)) {
    throw new Error(`${name}: column "${column}" has non-numeric value "${row[column]}"`);
  }
  return v;
}
