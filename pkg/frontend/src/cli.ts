import { parseArgs } from "node:util";

import { FigureKind, FigureSpec, allowedMetrics, plotFigure, validateSpec } from "./figures.js";

const USAGE = `usage: edgecache-plot plot --kind vs-size|per-client --metric NAME
                      --in FILE.csv [FILE.csv ...] --out FILE.svg

Figure kinds:
  vs-size      one line per policy over total cache size, error bars spanning
               the seed min/max; reads sweep summary CSVs
  per-client   per-client bars grouped by serving MEC, one colour per policy;
               reads per-period CSVs, one file per policy

Metrics:
  vs-size:     ${allowedMetrics("vs-size").join(", ")}
  per-client:  ${allowedMetrics("per-client").join(", ")}

The output is always SVG, whatever extension the path carries.`;

export function runCli(argv: string[]): number {
    let parsed;
    try {
        parsed = parseArgs({
            args: argv,
            options: {
                kind: { type: "string" },
                metric: { type: "string" },
                in: { type: "string", multiple: true },
                out: { type: "string" },
                help: { type: "boolean", short: "h" },
            },
            allowPositionals: true,
        });
    } catch (err) {
        console.error((err as Error).message);
        console.error(USAGE);
        return 2;
    }
    if (parsed.values.help) {
        console.log(USAGE);
        return 0;
    }
    const positionals = [...parsed.positionals];
    if (positionals[0] === "plot") {
        positionals.shift();
    }
    // Bare paths listed after --in parse as positionals; fold them back in
    // so "--in a.csv b.csv" works as expected.
    const spec: FigureSpec = {
        kind: (parsed.values.kind ?? "") as FigureKind,
        metric: parsed.values.metric ?? "",
        inputs: [...(parsed.values.in ?? []), ...positionals],
        output: parsed.values.out ?? "",
    };
    try {
        validateSpec(spec);
    } catch (err) {
        console.error((err as Error).message);
        console.error(USAGE);
        return 2;
    }
    try {
        plotFigure(spec);
    } catch (err) {
        console.error((err as Error).message);
        return 1;
    }
    console.log(`wrote ${spec.output}`);
    return 0;
}
