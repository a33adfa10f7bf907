import { existsSync, mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { runCli } from "../src/cli.js";
import { deskPath, periodPath } from "./paths.js";

const workDir = mkdtempSync(join(tmpdir(), "edgecache-cli-"));
afterAll(() => {
    rmSync(workDir, { recursive: true, force: true });
});

let logs: string[];
let errors: string[];

beforeEach(() => {
    logs = [];
    errors = [];
    vi.spyOn(console, "log").mockImplementation((...args: unknown[]) => {
        logs.push(args.join(" "));
    });
    vi.spyOn(console, "error").mockImplementation((...args: unknown[]) => {
        errors.push(args.join(" "));
    });
});

afterEach(() => {
    vi.restoreAllMocks();
});

describe("runCli", () => {
    it("plots a vs-size figure from the shipped summary", () => {
        const out = join(workDir, "vs.svg");
        const code = runCli(["plot", "--kind", "vs-size",
            "--metric", "mean_throughput_bps",
            "--in", deskPath("summary.csv"), "--out", out]);
        expect(code).toBe(0);
        expect(existsSync(out)).toBe(true);
        expect(readFileSync(out, "utf8")).toMatch(/^<svg /);
        expect(logs).toEqual([`wrote ${out}`]);
    });

    it("collects bare paths after --in for the per-client figure", () => {
        const out = join(workDir, "clients.svg");
        const code = runCli(["plot", "--kind", "per-client",
            "--metric", "delivered_bits",
            "--in", periodPath("proposed"), periodPath("none"),
            "--out", out]);
        expect(code).toBe(0);
        const svg = readFileSync(out, "utf8");
        expect(svg).toContain(">proposed</text>");
        expect(svg).toContain(">none</text>");
    });

    it("works without the plot subcommand word", () => {
        const out = join(workDir, "bare.svg");
        const code = runCli(["--kind", "vs-size", "--metric", "hit_ratio",
            "--in", deskPath("summary.csv"), "--out", out]);
        expect(code).toBe(0);
        expect(existsSync(out)).toBe(true);
    });

    it("prints usage with --help", () => {
        expect(runCli(["--help"])).toBe(0);
        expect(logs.join("\n")).toContain("usage: edgecache-plot plot --kind");
    });

    it("rejects a missing output path", () => {
        const code = runCli(["plot", "--kind", "vs-size", "--metric", "hit_ratio",
            "--in", deskPath("summary.csv")]);
        expect(code).toBe(2);
        expect(errors[0]).toContain("no output path");
    });

    it("rejects unknown kinds and metrics as usage errors", () => {
        expect(runCli(["plot", "--kind", "histogram", "--metric", "hit_ratio",
            "--in", "x.csv", "--out", "y.svg"])).toBe(2);
        expect(errors[0]).toContain('unknown figure kind "histogram"');

        errors = [];
        expect(runCli(["plot", "--kind", "per-client", "--metric", "hit_ratio",
            "--in", "x.csv", "--out", "y.svg"])).toBe(2);
        expect(errors[0]).toContain("pick one of: delivered_bits");
    });

    it("rejects unknown options", () => {
        expect(runCli(["plot", "--frobnicate"])).toBe(2);
        expect(errors.length).toBeGreaterThan(0);
    });

    it("reports unreadable inputs as data errors", () => {
        const code = runCli(["plot", "--kind", "vs-size", "--metric", "hit_ratio",
            "--in", join(workDir, "absent.csv"), "--out", join(workDir, "z.svg")]);
        expect(code).toBe(1);
        expect(errors[0]).toContain("absent.csv");
    });

    it("reports single-size summaries as data errors", () => {
        const oneSize = join(workDir, "one_size.csv");
        const lines = readFileSync(deskPath("summary.csv"), "utf8").split("\n");
        const kept = [lines[0],
            ...lines.slice(1).filter(l => l.split(",")[1] === "200000000")];
        writeFileSync(oneSize, kept.join("\n") + "\n");
        const code = runCli(["plot", "--kind", "vs-size",
            "--metric", "mean_frozen_s",
            "--in", oneSize, "--out", join(workDir, "flat.svg")]);
        expect(code).toBe(1);
        expect(errors[0]).toContain("at least 2 distinct cache sizes");
    });
});
