// Edit history as trace-log CSV, the same flat format the Python side
// writes and reads (one row per applied edit, 1-based steps).

export const TRACE_HEADER = [
  "sample_id",
  "strategy",
  "step",
  "concept_index",
  "gain",
  "old",
  "new",
  "prediction_after",
] as const;

export interface TraceRow {
  sampleId: string;
  strategy: string;
  step: number;
  conceptIndex: number;
  gain: number;
  old: number;
  new: number;
  predictionAfter: number;
}

function quote(field: string): string {
  if (/[",\n\r]/.test(field)) return `"${field.replace(/"/g, '""')}"`;
  return field;
}

export function toTraceCsv(rows: TraceRow[]): string {
  const lines = [TRACE_HEADER.join(",")];
  for (const r of rows) {
    lines.push(
      [
        quote(r.sampleId),
        quote(r.strategy),
        String(r.step),
        String(r.conceptIndex),
        String(r.gain),
        String(r.old),
        String(r.new),
        String(r.predictionAfter),
      ].join(","),
    );
  }
  return lines.join("\r\n") + "\r\n";
}

function splitCsvLine(line: string): string[] {
  const fields: string[] = [];
  let cur = "";
  let quoted = false;
  for (let i = 0; i < line.length; i++) {
    const ch = line[i];
    if (quoted) {
      if (ch === '"') {
        if (line[i + 1] === '"') {
          cur += '"';
          i++;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch === '"') {
      quoted = true;
    } else if (ch === ",") {
      fields.push(cur);
      cur = "";
    } else {
      cur += ch;
    }
  }
  fields.push(cur);
  return fields;
}

function parseNumber(text: string, what: string): number {
  const x = Number(text);
  if (text.trim() === "" || Number.isNaN(x)) {
    throw new Error(`bad ${what} value ${JSON.stringify(text)}`);
  }
  return x;
}

export function parseTraceCsv(text: string): TraceRow[] {
  const lines = text.split(/\r\n|\r|\n/).filter((ln) => ln.length > 0);
  if (lines.length === 0 || splitCsvLine(lines[0]).join(",") !== TRACE_HEADER.join(",")) {
    throw new Error(`not a trace log (unexpected header ${JSON.stringify(lines[0] ?? "")})`);
  }
  return lines.slice(1).map((ln, i) => {
    const f = splitCsvLine(ln);
    if (f.length !== TRACE_HEADER.length) {
      throw new Error(`row ${i + 1}: expected ${TRACE_HEADER.length} fields, got ${f.length}`);
    }
    return {
      sampleId: f[0],
      strategy: f[1],
      step: parseNumber(f[2], "step"),
      conceptIndex: parseNumber(f[3], "concept_index"),
      gain: parseNumber(f[4], "gain"),
      old: parseNumber(f[5], "old"),
      new: parseNumber(f[6], "new"),
      predictionAfter: parseNumber(f[7], "prediction_after"),
    };
  });
}
