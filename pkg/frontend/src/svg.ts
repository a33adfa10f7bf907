// Hand-rolled SVG assembly. Everything here is deterministic string
// building: fixed-point coordinates, insertion-ordered attributes, no
// timestamps, so identical figure data yields identical bytes.

export const POLICY_ORDER = ["proposed", "lru", "lfu", "wgdsf", "rbcc", "none"];

const PALETTE: Record<string, string> = {
    proposed: "#d62728",
    lru: "#1f77b4",
    lfu: "#2ca02c",
    wgdsf: "#9467bd",
    rbcc: "#e8850c",
    none: "#7f7f7f",
};

const EXTRA_COLORS = ["#17becf", "#bcbd22", "#8c564b", "#e377c2"];

export function policyColor(name: string, fallbackIdx: number): string {
    return PALETTE[name] ?? EXTRA_COLORS[fallbackIdx % EXTRA_COLORS.length];
}

/** Known policies in their usual reporting order, then anything else sorted. */
export function orderPolicies(names: Iterable<string>): string[] {
    const have = [...new Set(names)];
    const known = POLICY_ORDER.filter(p => have.includes(p));
    const rest = have.filter(p => !POLICY_ORDER.includes(p)).sort();
    return [...known, ...rest];
}

export function escapeXml(s: string): string {
    return s
        .replace(/&/g, "&amp;")
        .replace(/</g, "&lt;")
        .replace(/>/g, "&gt;")
        .replace(/"/g, "&quot;");
}

/** Fixed two-decimal coordinate, with negative zero normalised away. */
export function px(v: number): string {
    const s = v.toFixed(2);
    return s === "-0.00" ? "0.00" : s;
}

export function tag(name: string, attrs: Record<string, string | number>, body = ""): string {
    const parts: string[] = [`<${name}`];
    for (const key of Object.keys(attrs)) {
        const v = attrs[key];
        parts.push(` ${key}="${typeof v === "number" ? px(v) : escapeXml(v)}"`);
    }
    parts.push(body === "" ? "/>" : `>${body}</${name}>`);
    return parts.join("");
}

export function text(x: number, y: number, body: string,
                     attrs: Record<string, string | number> = {}): string {
    return tag("text", { x, y, ...attrs }, escapeXml(body));
}

export function linearScale(d0: number, d1: number,
                            r0: number, r1: number): (v: number) => number {
    const span = d1 - d0;
    if (span === 0) {
        const mid = (r0 + r1) / 2;
        return () => mid;
    }
    return v => r0 + ((v - d0) / span) * (r1 - r0);
}

/** Round tick positions covering [lo, hi], aiming for about `target` of them. */
export function niceTicks(lo: number, hi: number, target: number): number[] {
    if (!(hi > lo)) {
        return [lo];
    }
    const rawStep = (hi - lo) / Math.max(1, target);
    const mag = Math.pow(10, Math.floor(Math.log10(rawStep)));
    const norm = rawStep / mag;
    const step = (norm <= 1 ? 1 : norm <= 2 ? 2 : norm <= 5 ? 5 : 10) * mag;
    const first = Math.ceil(lo / step - 1e-9);
    const last = Math.floor(hi / step + 1e-9);
    const ticks: number[] = [];
    for (let i = first; i <= last; i++) {
        ticks.push(i === 0 ? 0 : i * step);
    }
    return ticks;
}

/** Compact numeric label: engineering suffixes above 1000, short decimals below. */
export function fmtTick(v: number): string {
    const abs = Math.abs(v);
    if (abs >= 1e9) {
        return trimFixed(v / 1e9) + "G";
    }
    if (abs >= 1e6) {
        return trimFixed(v / 1e6) + "M";
    }
    if (abs >= 1e3) {
        return trimFixed(v / 1e3) + "k";
    }
    return trimFixed(v);
}

function trimFixed(v: number): string {
    return v.toFixed(3).replace(/\.?0+$/, "");
}

export function svgDocument(width: number, height: number, body: string): string {
    return `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" `
        + `viewBox="0 0 ${width} ${height}" font-family="sans-serif">\n`
        + tag("rect", { x: 0, y: 0, width, height, fill: "#ffffff" }) + "\n"
        + body
        + "</svg>\n";
}
