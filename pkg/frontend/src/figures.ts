// The two figure kinds: metric-vs-cache-size curves built from summary
// CSVs, and per-client bars grouped by serving MEC built from per-period
// CSVs. Builders turn CSV rows into a plain figure model; renderers turn
// the model into SVG text; plot* functions tie both to the filesystem.

import { writeFileSync } from "node:fs";

import {
    CLIENT_METRICS,
    PeriodTable,
    SUMMARY_METRICS,
    SummaryRow,
    clientMetricValue,
    readPeriods,
    readSummary,
    summaryMetric,
} from "./tables.js";
import {
    fmtTick,
    linearScale,
    niceTicks,
    orderPolicies,
    policyColor,
    px,
    svgDocument,
    tag,
    text,
} from "./svg.js";

export type FigureKind = "vs-size" | "per-client";

export interface FigureSpec {
    kind: FigureKind;
    metric: string;
    inputs: string[];
    output: string;
}

const METRIC_LABELS: Record<string, string> = {
    mean_throughput_bps: "mean throughput (bit/s)",
    hit_ratio: "hit ratio",
    mean_frozen_s: "mean frozen time (s)",
    backhaul_bytes: "backhaul traffic (bytes)",
    intermec_bytes: "inter-MEC traffic (bytes)",
    delivered_bits: "throughput (bit/s)",
    stall_s: "frozen time (s)",
    requests: "requests",
    hits: "cache hits",
};

export function allowedMetrics(kind: FigureKind): string[] {
    return kind === "vs-size" ? [...SUMMARY_METRICS] : [...CLIENT_METRICS];
}

export function validateSpec(spec: FigureSpec): void {
    if (spec.kind !== "vs-size" && spec.kind !== "per-client") {
        throw new Error(
            `unknown figure kind "${spec.kind}" (expected vs-size or per-client)`);
    }
    const allowed = allowedMetrics(spec.kind);
    if (!allowed.includes(spec.metric)) {
        throw new Error(
            `metric "${spec.metric}" not available for ${spec.kind} figures; `
            + `pick one of: ${allowed.join(", ")}`);
    }
    if (spec.inputs.length === 0) {
        throw new Error("no input CSV files given");
    }
    if (!spec.output) {
        throw new Error("no output path given");
    }
}

export interface SizePoint {
    size: number;
    mean: number;
    lo: number;
    hi: number;
    nSeeds: number;
}

export interface SizeSeries {
    policy: string;
    color: string;
    points: SizePoint[];
}

export interface VsSizeFigure {
    metric: string;
    yLabel: string;
    sizes: number[];
    series: SizeSeries[];
}

export function buildVsCacheSize(rows: SummaryRow[], metric: string): VsSizeFigure {
    const byPolicy = new Map<string, Map<number, number[]>>();
    for (const row of rows) {
        let bySize = byPolicy.get(row.policy);
        if (!bySize) {
            bySize = new Map();
            byPolicy.set(row.policy, bySize);
        }
        let values = bySize.get(row.totalCacheBytes);
        if (!values) {
            values = [];
            bySize.set(row.totalCacheBytes, values);
        }
        values.push(summaryMetric(row, metric));
    }
    const sizes = [...new Set(rows.map(r => r.totalCacheBytes))].sort((a, b) => a - b);
    if (sizes.length < 2) {
        throw new Error(
            `vs-size figure needs at least 2 distinct cache sizes, found ${sizes.length}`);
    }
    const policies = orderPolicies(byPolicy.keys());
    const series = policies.map((policy, i) => {
        const bySize = byPolicy.get(policy)!;
        const points = [...bySize.keys()].sort((a, b) => a - b).map(size => {
            const values = bySize.get(size)!;
            let sum = 0;
            let lo = values[0];
            let hi = values[0];
            for (const v of values) {
                sum += v;
                lo = Math.min(lo, v);
                hi = Math.max(hi, v);
            }
            return { size, mean: sum / values.length, lo, hi, nSeeds: values.length };
        });
        return { policy, color: policyColor(policy, i), points };
    });
    return { metric, yLabel: METRIC_LABELS[metric], sizes, series };
}

export function renderVsCacheSize(fig: VsSizeFigure): string {
    const width = 720;
    const height = 440;
    const left = 80;
    const right = width - 24;
    const top = 46;
    const bottom = height - 58;

    const xPad = 0.05 * (fig.sizes[fig.sizes.length - 1] - fig.sizes[0]);
    const x = linearScale(fig.sizes[0] - xPad, fig.sizes[fig.sizes.length - 1] + xPad,
                          left, right);
    let dataLo = Infinity;
    let dataHi = -Infinity;
    for (const series of fig.series) {
        for (const point of series.points) {
            dataLo = Math.min(dataLo, point.lo);
            dataHi = Math.max(dataHi, point.hi);
        }
    }
    if (dataLo === dataHi) {
        dataLo -= 1;
        dataHi += 1;
    }
    const yPad = 0.05 * (dataHi - dataLo);
    const y = linearScale(dataLo - yPad, dataHi + yPad, bottom, top);

    const parts: string[] = [];
    for (const tick of niceTicks(dataLo - yPad, dataHi + yPad, 6)) {
        const ty = y(tick);
        parts.push(tag("line", {
            x1: left, y1: ty, x2: right, y2: ty,
            stroke: "#dddddd", "stroke-width": 1,
        }));
        parts.push(text(left - 6, ty + 3, fmtTick(tick), {
            "text-anchor": "end", "font-size": 11, fill: "#333333",
        }));
    }
    for (const size of fig.sizes) {
        const tx = x(size);
        parts.push(tag("line", {
            x1: tx, y1: bottom, x2: tx, y2: bottom + 5,
            stroke: "#333333", "stroke-width": 1,
        }));
        parts.push(text(tx, bottom + 18, fmtTick(size), {
            "text-anchor": "middle", "font-size": 11, fill: "#333333",
        }));
    }
    parts.push(tag("line", {
        x1: left, y1: bottom, x2: right, y2: bottom,
        stroke: "#333333", "stroke-width": 1,
    }));
    parts.push(tag("line", {
        x1: left, y1: top, x2: left, y2: bottom,
        stroke: "#333333", "stroke-width": 1,
    }));
    parts.push(text((left + right) / 2, height - 16, "total MEC cache (bytes)", {
        "text-anchor": "middle", "font-size": 12, fill: "#333333",
    }));
    parts.push(tag("text", {
        x: 20, y: (top + bottom) / 2,
        transform: `rotate(-90 20 ${px((top + bottom) / 2)})`,
        "text-anchor": "middle", "font-size": 12, fill: "#333333",
    }, fig.yLabel));

    // Series are dodged sideways a few pixels so overlapping error bars
    // at the same cache size stay readable.
    const n = fig.series.length;
    fig.series.forEach((series, i) => {
        const dx = (i - (n - 1) / 2) * 3;
        for (const point of series.points) {
            const cx = x(point.size) + dx;
            if (point.hi > point.lo) {
                parts.push(tag("line", {
                    x1: cx, y1: y(point.lo), x2: cx, y2: y(point.hi),
                    stroke: series.color, "stroke-width": 1,
                }));
                for (const end of [point.lo, point.hi]) {
                    parts.push(tag("line", {
                        x1: cx - 4, y1: y(end), x2: cx + 4, y2: y(end),
                        stroke: series.color, "stroke-width": 1,
                    }));
                }
            }
            parts.push(tag("circle", {
                cx, cy: y(point.mean), r: 3, fill: series.color,
            }));
        }
        const coords = series.points
            .map(p => `${px(x(p.size) + dx)},${px(y(p.mean))}`)
            .join(" ");
        parts.push(tag("polyline", {
            points: coords, fill: "none",
            stroke: series.color, "stroke-width": 1.5,
        }));
    });

    let legendX = left;
    fig.series.forEach(series => {
        parts.push(tag("line", {
            x1: legendX, y1: 22, x2: legendX + 18, y2: 22,
            stroke: series.color, "stroke-width": 2,
        }));
        parts.push(text(legendX + 22, 26, series.policy, {
            "font-size": 12, fill: "#333333",
        }));
        legendX += 22 + series.policy.length * 7 + 16;
    });

    return svgDocument(width, height, parts.join("\n") + "\n");
}

export interface ClientKey {
    id: number;
    region: number;
}

export interface ClientSeries {
    policy: string;
    color: string;
    values: number[];
}

export interface PerClientFigure {
    metric: string;
    yLabel: string;
    clients: ClientKey[];
    regions: number[];
    series: ClientSeries[];
}

export function buildPerClient(tables: PeriodTable[], metric: string): PerClientFigure {
    if (tables.length === 0) {
        throw new Error("no per-period tables given");
    }
    const seen = new Set<string>();
    for (const table of tables) {
        if (seen.has(table.policy)) {
            throw new Error(`duplicate policy "${table.policy}" in inputs`);
        }
        seen.add(table.policy);
    }
    const base = tables[0];
    const clients = base.clients.map(c => ({ id: c.id, region: c.region }));
    for (const table of tables.slice(1)) {
        if (table.clients.length !== clients.length) {
            throw new Error(
                `${table.path}: ${table.clients.length} clients but `
                + `${base.path} has ${clients.length}`);
        }
        for (let i = 0; i < clients.length; i++) {
            const c = table.clients[i];
            if (c.id !== clients[i].id || c.region !== clients[i].region) {
                throw new Error(
                    `${table.path}: client ${c.id} (region ${c.region}) does not `
                    + `match ${base.path}; inputs must come from the same scenario`);
            }
        }
    }
    const byPolicy = new Map(tables.map(t => [t.policy, t]));
    const series = orderPolicies(byPolicy.keys()).map((policy, i) => {
        const table = byPolicy.get(policy)!;
        return {
            policy,
            color: policyColor(policy, i),
            values: table.clients.map(c => clientMetricValue(table, c, metric)),
        };
    });
    const regions = [...new Set(clients.map(c => c.region))].sort((a, b) => a - b);
    return { metric, yLabel: METRIC_LABELS[metric], clients, regions, series };
}

export function renderPerClient(fig: PerClientFigure): string {
    const barW = 4;
    const groupGap = 6;
    const groupW = fig.series.length * barW + groupGap;
    const panelGap = 26;
    const left = 76;
    const top = 50;
    const height = 400;
    const bottom = height - 56;

    const panels = fig.regions.map(region => {
        const indices = fig.clients
            .map((c, i) => ({ c, i }))
            .filter(e => e.c.region === region)
            .map(e => e.i);
        return { region, indices, width: indices.length * groupW };
    });
    let panelX = left;
    const panelStarts = panels.map(panel => {
        const start = panelX;
        panelX += panel.width + panelGap;
        return start;
    });
    const width = panelX - panelGap + 16;

    let dataHi = 0;
    for (const series of fig.series) {
        for (const v of series.values) {
            dataHi = Math.max(dataHi, v);
        }
    }
    if (dataHi === 0) {
        dataHi = 1;
    }
    const yTop = dataHi * 1.05;
    const y = linearScale(0, yTop, bottom, top);

    const parts: string[] = [];
    for (const tick of niceTicks(0, yTop, 6)) {
        const ty = y(tick);
        panels.forEach((panel, p) => {
            parts.push(tag("line", {
                x1: panelStarts[p], y1: ty,
                x2: panelStarts[p] + panel.width, y2: ty,
                stroke: "#dddddd", "stroke-width": 1,
            }));
        });
        parts.push(text(left - 6, ty + 3, fmtTick(tick), {
            "text-anchor": "end", "font-size": 11, fill: "#333333",
        }));
    }
    parts.push(tag("line", {
        x1: left, y1: top, x2: left, y2: bottom,
        stroke: "#333333", "stroke-width": 1,
    }));
    parts.push(tag("text", {
        x: 18, y: (top + bottom) / 2,
        transform: `rotate(-90 18 ${px((top + bottom) / 2)})`,
        "text-anchor": "middle", "font-size": 12, fill: "#333333",
    }, fig.yLabel));

    const labelStep = Math.max(1, Math.ceil(22 / groupW));
    panels.forEach((panel, p) => {
        const startX = panelStarts[p];
        parts.push(text(startX + panel.width / 2, top - 10, `MEC ${panel.region}`, {
            "text-anchor": "middle", "font-size": 13, fill: "#111111",
            "font-weight": "bold",
        }));
        parts.push(tag("line", {
            x1: startX, y1: bottom, x2: startX + panel.width, y2: bottom,
            stroke: "#333333", "stroke-width": 1,
        }));
        panel.indices.forEach((clientIdx, k) => {
            const groupX = startX + k * groupW + groupGap / 2;
            fig.series.forEach((series, s) => {
                const v = series.values[clientIdx];
                const barTop = y(v);
                parts.push(tag("rect", {
                    class: "bar",
                    x: groupX + s * barW, y: barTop,
                    width: barW, height: bottom - barTop,
                    fill: series.color,
                }));
            });
            if (k % labelStep === 0) {
                const centre = groupX + (groupW - groupGap) / 2;
                parts.push(tag("line", {
                    x1: centre, y1: bottom, x2: centre, y2: bottom + 4,
                    stroke: "#333333", "stroke-width": 1,
                }));
                parts.push(text(centre, bottom + 16, String(fig.clients[clientIdx].id), {
                    "text-anchor": "middle", "font-size": 9, fill: "#333333",
                }));
            }
        });
    });
    parts.push(text(left + (width - left - 16) / 2, height - 14, "client id", {
        "text-anchor": "middle", "font-size": 12, fill: "#333333",
    }));

    let legendX = left;
    fig.series.forEach(series => {
        parts.push(tag("rect", {
            x: legendX, y: 14, width: 10, height: 10, fill: series.color,
        }));
        parts.push(text(legendX + 14, 23, series.policy, {
            "font-size": 12, fill: "#333333",
        }));
        legendX += 14 + series.policy.length * 7 + 16;
    });

    return svgDocument(width, height, parts.join("\n") + "\n");
}

export function plotVsCacheSize(spec: FigureSpec): string {
    const rows: SummaryRow[] = [];
    for (const path of spec.inputs) {
        rows.push(...readSummary(path));
    }
    const svg = renderVsCacheSize(buildVsCacheSize(rows, spec.metric));
    writeFileSync(spec.output, svg);
    return svg;
}

export function plotPerClient(spec: FigureSpec): string {
    const tables = spec.inputs.map(path => readPeriods(path));
    const svg = renderPerClient(buildPerClient(tables, spec.metric));
    writeFileSync(spec.output, svg);
    return svg;
}

export function plotFigure(spec: FigureSpec): string {
    validateSpec(spec);
    return spec.kind === "vs-size" ? plotVsCacheSize(spec) : plotPerClient(spec);
}
