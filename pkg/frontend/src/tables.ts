// Typed readers for the two CSV schemas the simulator CLI writes: the
// sweep summary (one row per policy/size/seed) and the per-period detail
// file (client and MEC rows interleaved per period).

import { CsvFormatError, CsvTable, columnIndex, numberAt, readCsv } from "./csv.js";

export interface SummaryRow {
    policy: string;
    totalCacheBytes: number;
    seed: number;
    meanThroughputBps: number;
    hitRatio: number;
    meanFrozenS: number;
    backhaulBytes: number;
    intermecBytes: number;
}

const SUMMARY_FIELDS: Record<string, keyof SummaryRow> = {
    mean_throughput_bps: "meanThroughputBps",
    hit_ratio: "hitRatio",
    mean_frozen_s: "meanFrozenS",
    backhaul_bytes: "backhaulBytes",
    intermec_bytes: "intermecBytes",
};

export const SUMMARY_METRICS = Object.keys(SUMMARY_FIELDS);

export function summaryMetric(row: SummaryRow, metric: string): number {
    const field = SUMMARY_FIELDS[metric];
    if (!field) {
        throw new Error(`unknown summary metric "${metric}"`);
    }
    return row[field] as number;
}

export function summaryRows(table: CsvTable): SummaryRow[] {
    const policy = columnIndex(table, "policy");
    const total = columnIndex(table, "total_cache_bytes");
    const seed = columnIndex(table, "seed");
    const columns = new Map<keyof SummaryRow, number>();
    for (const metric of SUMMARY_METRICS) {
        columns.set(SUMMARY_FIELDS[metric], columnIndex(table, metric));
    }
    const rows: SummaryRow[] = [];
    for (let i = 0; i < table.rows.length; i++) {
        const row: SummaryRow = {
            policy: table.rows[i][policy],
            totalCacheBytes: numberAt(table, i, total),
            seed: numberAt(table, i, seed),
            meanThroughputBps: 0,
            hitRatio: 0,
            meanFrozenS: 0,
            backhaulBytes: 0,
            intermecBytes: 0,
        };
        for (const [field, idx] of columns) {
            (row[field] as number) = numberAt(table, i, idx);
        }
        rows.push(row);
    }
    return rows;
}

export function readSummary(path: string): SummaryRow[] {
    return summaryRows(readCsv(path));
}

export interface ClientTotals {
    id: number;
    region: number;
    deliveredBits: number;
    stallS: number;
    requests: number;
    hits: number;
}

/** One per-period CSV reduced to run totals per client and per MEC. */
export interface PeriodTable {
    path: string;
    policy: string;
    totalCacheBytes: number;
    seed: number;
    tdS: number;
    nPeriods: number;
    clients: ClientTotals[];
    backhaulBytes: number;
    intermecBytes: number;
}

export function periodTable(table: CsvTable): PeriodTable {
    const col = {
        policy: columnIndex(table, "policy"),
        total: columnIndex(table, "total_cache_bytes"),
        seed: columnIndex(table, "seed"),
        tdS: columnIndex(table, "td_s"),
        period: columnIndex(table, "period"),
        row: columnIndex(table, "row"),
        id: columnIndex(table, "id"),
        region: columnIndex(table, "region"),
        deliveredBits: columnIndex(table, "delivered_bits"),
        stallS: columnIndex(table, "stall_s"),
        requests: columnIndex(table, "requests"),
        hits: columnIndex(table, "hits"),
        backhaul: columnIndex(table, "backhaul_bytes"),
        intermec: columnIndex(table, "intermec_bytes"),
    };
    if (table.rows.length === 0) {
        throw new CsvFormatError(`${table.path}: no data rows`);
    }
    const policy = table.rows[0][col.policy];
    const totalCacheBytes = numberAt(table, 0, col.total);
    const seed = numberAt(table, 0, col.seed);
    const tdS = numberAt(table, 0, col.tdS);
    const periods = new Set<number>();
    const clients = new Map<number, ClientTotals>();
    let backhaulBytes = 0;
    let intermecBytes = 0;
    for (let i = 0; i < table.rows.length; i++) {
        const cells = table.rows[i];
        if (cells[col.policy] !== policy || numberAt(table, i, col.total) !== totalCacheBytes
                || numberAt(table, i, col.seed) !== seed || numberAt(table, i, col.tdS) !== tdS) {
            throw new CsvFormatError(
                `${table.path}:${i + 2}: mixed runs in one file (expected `
                + `${policy}/${totalCacheBytes}/seed ${seed})`);
        }
        periods.add(numberAt(table, i, col.period));
        const kind = cells[col.row];
        if (kind === "client") {
            const id = numberAt(table, i, col.id);
            const region = numberAt(table, i, col.region);
            let totals = clients.get(id);
            if (!totals) {
                totals = { id, region, deliveredBits: 0, stallS: 0, requests: 0, hits: 0 };
                clients.set(id, totals);
            } else if (totals.region !== region) {
                throw new CsvFormatError(
                    `${table.path}:${i + 2}: client ${id} changed region `
                    + `${totals.region} -> ${region}`);
            }
            totals.deliveredBits += numberAt(table, i, col.deliveredBits);
            totals.stallS += numberAt(table, i, col.stallS);
            totals.requests += numberAt(table, i, col.requests);
            totals.hits += numberAt(table, i, col.hits);
        } else if (kind === "mec") {
            backhaulBytes += numberAt(table, i, col.backhaul);
            intermecBytes += numberAt(table, i, col.intermec);
        } else {
            throw new CsvFormatError(
                `${table.path}:${i + 2}: unknown row kind "${kind}"`);
        }
    }
    const ordered = [...clients.values()].sort((a, b) => a.id - b.id);
    return {
        path: table.path,
        policy,
        totalCacheBytes,
        seed,
        tdS,
        nPeriods: periods.size,
        clients: ordered,
        backhaulBytes,
        intermecBytes,
    };
}

export function readPeriods(path: string): PeriodTable {
    return periodTable(readCsv(path));
}

export const CLIENT_METRICS = ["delivered_bits", "stall_s", "requests", "hits"];

export function clientThroughputBps(table: PeriodTable, client: ClientTotals): number {
    return client.deliveredBits / (table.nPeriods * table.tdS);
}

/**
 * Per-client value of a metric over the whole run. delivered_bits is turned
 * into a delivery rate in bit/s (the per-client analogue of the summary's
 * mean throughput); the other metrics are plain run totals.
 */
export function clientMetricValue(table: PeriodTable, client: ClientTotals,
                                  metric: string): number {
    switch (metric) {
        case "delivered_bits":
            return clientThroughputBps(table, client);
        case "stall_s":
            return client.stallS;
        case "requests":
            return client.requests;
        case "hits":
            return client.hits;
    }
    throw new Error(`unknown per-client metric "${metric}"`);
}

export interface RecomputationReport {
    policy: string;
    seed: number;
    clientSumBps: number;
    summaryProductBps: number;
    toleranceBps: number;
    ok: boolean;
}

/**
 * Cross-check a per-period file against its summary row: the per-client
 * throughputs recomputed here must sum to the summary's client mean times
 * the client count. The summary stores that mean rounded to a whole bit/s,
 * so the comparison allows half a bit of rounding per client.
 */
export function checkThroughputRecomputation(table: PeriodTable,
                                             summary: SummaryRow[]): RecomputationReport {
    const row = summary.find(r => r.policy === table.policy
        && r.totalCacheBytes === table.totalCacheBytes
        && r.seed === table.seed);
    if (!row) {
        throw new Error(
            `no summary row matches ${table.policy}/${table.totalCacheBytes}`
            + `/seed ${table.seed} (from ${table.path})`);
    }
    let clientSumBps = 0;
    for (const client of table.clients) {
        clientSumBps += clientThroughputBps(table, client);
    }
    const summaryProductBps = row.meanThroughputBps * table.clients.length;
    const toleranceBps = 0.5 * table.clients.length;
    return {
        policy: table.policy,
        seed: table.seed,
        clientSumBps,
        summaryProductBps,
        toleranceBps,
        ok: Math.abs(clientSumBps - summaryProductBps) <= toleranceBps,
    };
}
