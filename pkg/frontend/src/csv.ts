/**
 * Client-side CSV handling: enough RFC-4180 to list headers and preview a
 * column. Full-file parsing stays server-side; this only mirrors the
 * service's preview semantics (first n values, original order, unmodified).
 */

export function parseCsv(text: string): string[][] {
  const rows: string[][] = [];
  let row: string[] = [];
  let field = '';
  let inQuotes = false;
  let i = 0;
  while (i < text.length) {
    const ch = text[i];
    if (inQuotes) {
      if (ch === '"') {
        if (text[i + 1] === '"') {
          field += '"';
          i += 2;
          continue;
        }
        inQuotes = false;
        i += 1;
        continue;
      }
      field += ch;
      i += 1;
      continue;
    }
    if (ch === '"') {
      inQuotes = true;
      i += 1;
    } else if (ch === ',') {
      row.push(field);
      field = '';
      i += 1;
    } else if (ch === '\r') {
      i += 1; // handled with the following \n (or dropped)
    } else if (ch === '\n') {
      row.push(field);
      rows.push(row);
      row = [];
      field = '';
      i += 1;
    } else {
      field += ch;
      i += 1;
    }
  }
  if (field.length > 0 || row.length > 0) {
    row.push(field);
    rows.push(row);
  }
  return rows.filter((r) => r.some((cell) => cell.trim().length > 0));
}

export function parseHeaders(text: string): string[] {
  const rows = parseCsv(text);
  return rows.length > 0 ? rows[0]! : [];
}

/** First n values of one column, original order; mirrors the service's preview. */
export function previewColumn(text: string, column: string, n = 5): string[] {
  const rows = parseCsv(text);
  if (rows.length === 0) return [];
  const header = rows[0]!;
  const index = header.indexOf(column);
  if (index < 0) return [];
  return rows
    .slice(1, 1 + n)
    .map((row) => row[index] ?? '');
}
