"""Command-line experiment runner.

Subcommands:

* ``run``: sweep policy x cache-size x seed cells of a scenario, writing
  one per-period CSV and one summary CSV per cell plus a merged
  ``summary.csv``.  Cells run in parallel under ``--jobs``; the merge is
  single-threaded and sorted, so reruns are byte-identical.
* ``validate``: parse a scenario file and report every problem found.
* ``solve``: feed a placement-problem dump (the solver module's
  ``budgets``/``item`` line format) straight to the solver, for debugging
  pruning or budget questions outside a full run.

Set ``EDGECACHE_LOG`` (debug/info/warning/error) to change log verbosity.

CSV schemas
-----------

The per-period file has one row per (period, client) and one per
(period, MEC), told apart by the ``row`` column:

* ``row=client``: ``id`` is the client, ``region`` its serving MEC, and
  ``delivered_bits``/``stall_s``/``requests``/``hits`` are that period's
  deltas.  The byte columns are empty.
* ``row=mec``: ``id`` and ``region`` are the MEC, and
  ``backhaul_bytes``/``intermec_bytes`` hold its delivery plus
  cache-update bytes for the period.  The client columns are empty.

Floats in the per-period file use round-trip formatting, so the summary
values are exact aggregations of the file: mean throughput in bps is
``sum(delivered_bits) / (n_periods * td_s) / n_clients`` rounded to the
nearest integer (ties to even), the hit ratio is total hits over total
requests with six decimals, and the mean frozen time is the per-client
stall total averaged over clients, again with six decimals.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .scenario import Scenario, ScenarioError, load_scenario, validate_scenario
from .sim import POLICY_NAMES, MetricsLog, run_experiment
from .solver import SolverError, branch_and_bound, load_problem

log = logging.getLogger("edgecache.cli")

PERIOD_FIELDS = ("policy", "total_cache_bytes", "seed", "td_s", "period",
                 "row", "id", "region", "delivered_bits", "stall_s",
                 "requests", "hits", "backhaul_bytes", "intermec_bytes")
SUMMARY_FIELDS = ("policy", "total_cache_bytes", "seed",
                  "mean_throughput_bps", "hit_ratio", "mean_frozen_s",
                  "backhaul_bytes", "intermec_bytes")


def cell_stem(policy: str, total: int, seed: int) -> str:
    return f"{policy}_c{total}_s{seed}"


def _roundtrip(x: float) -> str:
    """Shortest decimal string that parses back to exactly ``x``."""
    return repr(float(x))


def summary_row(policy: str, total: int, seed: int,
                metrics: MetricsLog) -> dict[str, str]:
    return {
        "policy": policy,
        "total_cache_bytes": str(total),
        "seed": str(seed),
        "mean_throughput_bps": str(round(metrics.mean_throughput_bps())),
        "hit_ratio": f"{metrics.hit_ratio():.6f}",
        "mean_frozen_s": f"{metrics.mean_frozen_s():.6f}",
        "backhaul_bytes": str(metrics.total_backhaul_bytes()),
        "intermec_bytes": str(metrics.total_intermec_bytes()),
    }


def _write_csv(path: Path, fields: tuple[str, ...],
               rows: list[dict[str, str]]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=fields, restval="",
                                lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def write_period_csv(path: Path, policy: str, total: int, seed: int,
                     metrics: MetricsLog) -> None:
    base = {"policy": policy, "total_cache_bytes": str(total),
            "seed": str(seed), "td_s": _roundtrip(metrics.td_s)}
    rows = []
    for record in metrics.records:
        for k in range(metrics.n_clients):
            rows.append(dict(base, period=str(record.period), row="client",
                             id=str(k),
                             region=str(metrics.client_regions[k]),
                             delivered_bits=str(record.delivered_bits[k]),
                             stall_s=_roundtrip(record.stall_s[k]),
                             requests=str(record.requests[k]),
                             hits=str(record.hits[k])))
        for q in range(metrics.n_mecs):
            rows.append(dict(base, period=str(record.period), row="mec",
                             id=str(q), region=str(q),
                             backhaul_bytes=str(record.backhaul_bytes[q]),
                             intermec_bytes=str(record.intermec_bytes[q])))
    _write_csv(path, PERIOD_FIELDS, rows)


def _run_cell(job: tuple[Scenario, str, int, int, str]) -> dict[str, str]:
    scenario, policy, total, seed, out_dir = job
    metrics = run_experiment(scenario, policy, seed)
    stem = cell_stem(policy, total, seed)
    out = Path(out_dir)
    write_period_csv(out / f"{stem}_periods.csv", policy, total, seed, metrics)
    row = summary_row(policy, total, seed, metrics)
    _write_csv(out / f"{stem}_summary.csv", SUMMARY_FIELDS, [row])
    return row


# -- subcommands -------------------------------------------------------------

def _cmd_run(args: argparse.Namespace) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as exc:
        for error in exc.errors:
            print(error, file=sys.stderr)
        return 1
    policies = list(dict.fromkeys(args.policy or POLICY_NAMES))
    unknown = [p for p in policies if p not in POLICY_NAMES]
    if unknown:
        print(f"unknown policies: {', '.join(unknown)} "
              f"(choose from {', '.join(POLICY_NAMES)})", file=sys.stderr)
        return 1
    sizes = list(dict.fromkeys(args.sizes or [scenario.cache.total_size]))
    seeds = list(dict.fromkeys(args.seeds or scenario.seeds))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    cells = [(policy, total, seed) for policy in policies
             for total in sizes for seed in seeds]
    jobs = []
    for policy, total, seed in cells:
        cell_scenario = scenario
        if total != scenario.cache.total_size:
            cell_scenario = scenario.with_total_size(total)
        jobs.append((cell_scenario, policy, total, seed, str(out)))
    log.info("running %d cells (%d policies x %d sizes x %d seeds) into %s",
             len(cells), len(policies), len(sizes), len(seeds), out)

    results: dict[tuple[str, int, int], dict[str, str]] = {}
    failures: dict[tuple[str, int, int], str] = {}
    if args.jobs <= 1:
        for cell, job in zip(cells, jobs):
            try:
                results[cell] = _run_cell(job)
            except Exception as exc:
                failures[cell] = f"{type(exc).__name__}: {exc}"
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = {cell: pool.submit(_run_cell, job)
                       for cell, job in zip(cells, jobs)}
            for cell, future in futures.items():
                try:
                    results[cell] = future.result()
                except Exception as exc:
                    failures[cell] = f"{type(exc).__name__}: {exc}"

    merged = [results[cell] for cell in sorted(results)]
    _write_csv(out / "summary.csv", SUMMARY_FIELDS, merged)
    for cell in sorted(failures):
        log.error("cell %s failed: %s", cell_stem(*cell), failures[cell])
    if failures:
        manifest = {
            "completed": [cell_stem(*cell) for cell in sorted(results)],
            "failed": [{"cell": cell_stem(*cell), "error": failures[cell]}
                       for cell in sorted(failures)],
        }
        with open(out / "manifest.json", "w") as handle:
            json.dump(manifest, handle, indent=2)
            handle.write("\n")
        print(f"{len(failures)} of {len(cells)} cells failed; "
              f"see {out / 'manifest.json'}", file=sys.stderr)
        return 1
    log.info("wrote %s", out / "summary.csv")
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    errors = validate_scenario(args.scenario)
    if errors:
        for error in errors:
            print(error)
        return 1
    print("OK")
    return 0


def _cmd_solve(args: argparse.Namespace) -> int:
    try:
        with open(args.problem) as handle:
            problem = load_problem(handle.read())
    except (OSError, ValueError) as exc:
        print(f"bad problem file: {exc}", file=sys.stderr)
        return 1
    try:
        solution = branch_and_bound(problem)
    except SolverError as exc:
        print(f"solver gave up: {exc}", file=sys.stderr)
        return 1
    json.dump({"selected": list(solution.selected),
               "objective": solution.objective,
               "nodes": solution.nodes,
               "bytes_used": list(solution.bytes_used)},
              sys.stdout, indent=2)
    print()
    return 0


# -- entry point -------------------------------------------------------------

def _log_level(name: str | None) -> int:
    table = {"debug": logging.DEBUG, "info": logging.INFO,
             "warning": logging.WARNING, "error": logging.ERROR}
    return table.get((name or "").lower(), logging.WARNING)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="edgecache",
        description="Cooperative edge-cache experiment runner.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="sweep a scenario and write CSV metrics")
    run.add_argument("scenario", help="scenario file to run")
    # action="extend" so repeating a flag adds to the sweep instead of
    # silently replacing what the earlier flag selected
    run.add_argument("--policy", nargs="+", action="extend", metavar="NAME",
                     help=f"policies to sweep (default: all of "
                          f"{', '.join(POLICY_NAMES)})")
    run.add_argument("--sizes", nargs="+", action="extend", metavar="BYTES",
                     type=lambda s: int(float(s)),
                     help="total cache sizes to sweep (default: scenario value)")
    run.add_argument("--seeds", nargs="+", action="extend", metavar="SEED",
                     type=int, help="seeds to sweep (default: scenario seeds)")
    run.add_argument("--jobs", type=int, default=1, metavar="N",
                     help="cells to run in parallel (default: 1)")
    run.add_argument("--out", default="results", metavar="DIR",
                     help="output directory (default: results)")
    run.set_defaults(func=_cmd_run)

    validate = sub.add_parser("validate",
                              help="check a scenario file and report errors")
    validate.add_argument("scenario", help="scenario file to check")
    validate.set_defaults(func=_cmd_validate)

    solve = sub.add_parser("solve",
                           help="solve a placement-problem dump file")
    solve.add_argument("problem", help="file of 'budgets <space> <link>...' "
                                       "and 'item <ps> <size> <bytes>...' lines")
    solve.set_defaults(func=_cmd_solve)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=_log_level(os.environ.get("EDGECACHE_LOG")),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
