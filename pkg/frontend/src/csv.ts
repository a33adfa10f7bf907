// Minimal CSV access for the simulator's output files. Those files are
// plain comma-separated numbers and short tokens; there is no quoting or
// escaping to deal with, so a line split is the whole parser.

import { readFileSync } from "node:fs";

export class MissingColumnError extends Error {
    constructor(readonly path: string, readonly column: string) {
        super(`${path}: missing required column "${column}"`);
        this.name = "MissingColumnError";
    }
}

export class CsvFormatError extends Error {
    constructor(message: string) {
        super(message);
        this.name = "CsvFormatError";
    }
}

export interface CsvTable {
    path: string;
    header: string[];
    rows: string[][];
}

export function parseCsv(text: string, path: string): CsvTable {
    const lines = text.split(/\r?\n/);
    while (lines.length > 0 && lines[lines.length - 1] === "") {
        lines.pop();
    }
    if (lines.length === 0) {
        throw new CsvFormatError(`${path}: empty file`);
    }
    const header = lines[0].split(",");
    const rows: string[][] = [];
    for (let i = 1; i < lines.length; i++) {
        const cells = lines[i].split(",");
        if (cells.length !== header.length) {
            throw new CsvFormatError(
                `${path}:${i + 1}: expected ${header.length} fields, got ${cells.length}`);
        }
        rows.push(cells);
    }
    return { path, header, rows };
}

export function readCsv(path: string): CsvTable {
    return parseCsv(readFileSync(path, "utf8"), path);
}

/** Index of a named column, or a MissingColumnError naming it. */
export function columnIndex(table: CsvTable, name: string): number {
    const idx = table.header.indexOf(name);
    if (idx < 0) {
        throw new MissingColumnError(table.path, name);
    }
    return idx;
}

export function numberAt(table: CsvTable, rowIdx: number, colIdx: number): number {
    const raw = table.rows[rowIdx][colIdx];
    const value = Number(raw);
    if (raw === "" || !Number.isFinite(value)) {
        throw new CsvFormatError(
            `${table.path}:${rowIdx + 2}: bad number "${raw}" `
            + `in column "${table.header[colIdx]}"`);
    }
    return value;
}
