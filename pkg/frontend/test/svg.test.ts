import { describe, expect, it } from "vitest";

import {
    escapeXml,
    fmtTick,
    linearScale,
    niceTicks,
    orderPolicies,
    policyColor,
    px,
    tag,
} from "../src/svg.js";

describe("px", () => {
    it("renders two decimals", () => {
        expect(px(3)).toBe("3.00");
        expect(px(1.005)).toBe("1.00");
        expect(px(-2.5)).toBe("-2.50");
    });

    it("normalises negative zero", () => {
        expect(px(-0.001)).toBe("0.00");
    });
});

describe("escapeXml", () => {
    it("escapes markup characters", () => {
        expect(escapeXml('a<b>&"c')).toBe("a&lt;b&gt;&amp;&quot;c");
    });
});

describe("tag", () => {
    it("self-closes without a body", () => {
        expect(tag("line", { x1: 0, y1: 1.5, stroke: "#333" }))
            .toBe('<line x1="0.00" y1="1.50" stroke="#333"/>');
    });

    it("wraps a body", () => {
        expect(tag("g", { id: "top" }, "<rect/>")).toBe('<g id="top"><rect/></g>');
    });
});

describe("linearScale", () => {
    it("maps the domain onto the range", () => {
        const scale = linearScale(0, 10, 100, 200);
        expect(scale(0)).toBe(100);
        expect(scale(10)).toBe(200);
        expect(scale(5)).toBe(150);
    });

    it("inverts for screen-space y axes", () => {
        const scale = linearScale(0, 1, 300, 50);
        expect(scale(0)).toBe(300);
        expect(scale(1)).toBe(50);
    });

    it("collapses a degenerate domain to the midpoint", () => {
        const scale = linearScale(4, 4, 0, 100);
        expect(scale(4)).toBe(50);
        expect(scale(99)).toBe(50);
    });
});

describe("niceTicks", () => {
    it("uses round steps inside the range", () => {
        expect(niceTicks(0, 100, 5)).toEqual([0, 20, 40, 60, 80, 100]);
        const ticks = niceTicks(0.13, 0.91, 6);
        expect(ticks.map(t => Number(t.toFixed(10)))).toEqual([0.2, 0.4, 0.6, 0.8]);
    });

    it("handles large magnitudes", () => {
        const ticks = niceTicks(40e6, 210e6, 5);
        expect(ticks[0]).toBe(50e6);
        expect(ticks[ticks.length - 1]).toBe(200e6);
    });

    it("degenerates to a single tick on an empty range", () => {
        expect(niceTicks(3, 3, 5)).toEqual([3]);
    });
});

describe("fmtTick", () => {
    it("uses engineering suffixes", () => {
        expect(fmtTick(40000000)).toBe("40M");
        expect(fmtTick(1500)).toBe("1.5k");
        expect(fmtTick(2000000000)).toBe("2G");
    });

    it("trims small values", () => {
        expect(fmtTick(0.65)).toBe("0.65");
        expect(fmtTick(0)).toBe("0");
        expect(fmtTick(12)).toBe("12");
    });
});

describe("orderPolicies", () => {
    it("puts known policies in reporting order", () => {
        expect(orderPolicies(["none", "lru", "proposed"]))
            .toEqual(["proposed", "lru", "none"]);
    });

    it("appends unknown names sorted", () => {
        expect(orderPolicies(["zeta", "lfu", "alpha"]))
            .toEqual(["lfu", "alpha", "zeta"]);
    });

    it("deduplicates", () => {
        expect(orderPolicies(["lru", "lru"])).toEqual(["lru"]);
    });
});

describe("policyColor", () => {
    it("keeps a stable colour per policy", () => {
        expect(policyColor("proposed", 0)).toBe(policyColor("proposed", 3));
    });

    it("cycles fallback colours for unknown names", () => {
        expect(policyColor("custom", 0)).not.toBe(policyColor("custom", 1));
    });
});
