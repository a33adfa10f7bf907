"""The experiment runner: sweeps, CSV contracts, validate and solve."""

from __future__ import annotations

import csv
import json
import logging
from pathlib import Path

import pytest

from edgecache.cli import (PERIOD_FIELDS, SUMMARY_FIELDS, _log_level,
                           build_parser, cell_stem, main)
from edgecache.solver import PlacementProblem, dump_problem

from conftest import TINY_SCENARIO_TEXT

SCENARIO_DIR = Path(__file__).resolve().parents[1] / "scenarios"


@pytest.fixture()
def tiny_path(tmp_path):
    path = tmp_path / "tiny.scn"
    path.write_text(TINY_SCENARIO_TEXT)
    return path


def read_csv(path):
    with open(path, newline="") as handle:
        return list(csv.DictReader(handle))


def tree_bytes(root: Path) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in sorted(root.iterdir())
            if p.is_file()}


class TestValidate:
    def test_ok(self, capsys):
        assert main(["validate", str(SCENARIO_DIR / "desk.scn")]) == 0
        assert capsys.readouterr().out.strip() == "OK"

    def test_errors_name_their_field(self, tmp_path, capsys):
        bad = tmp_path / "bad.scn"
        bad.write_text(TINY_SCENARIO_TEXT.replace(
            "bandwidth_hz = 20e6", "bandwidth_hz = -1"))
        assert main(["validate", str(bad)]) == 1
        assert "topology.bandwidth_hz" in capsys.readouterr().out


class TestRun:
    def test_sweep_outputs(self, tiny_path, tmp_path):
        out = tmp_path / "results"
        code = main(["run", str(tiny_path), "--policy", "proposed", "none",
                     "--seeds", "7", "--out", str(out)])
        assert code == 0
        summary = read_csv(out / "summary.csv")
        assert list(summary[0]) == list(SUMMARY_FIELDS)
        assert [r["policy"] for r in summary] == ["none", "proposed"]
        none_row = summary[0]
        assert none_row["hit_ratio"] == "0.000000"
        assert none_row["intermec_bytes"] == "0"
        for row in summary:
            stem = cell_stem(row["policy"], int(row["total_cache_bytes"]),
                             int(row["seed"]))
            assert (out / f"{stem}_periods.csv").exists()
            cell = read_csv(out / f"{stem}_summary.csv")
            assert cell == [row]
        assert not (out / "manifest.json").exists()

    def test_headers_are_fixed(self, tiny_path, tmp_path):
        out = tmp_path / "results"
        main(["run", str(tiny_path), "--policy", "lru", "--out", str(out)])
        periods = read_csv(out / "lru_c20000000_s7_periods.csv")
        assert list(periods[0]) == list(PERIOD_FIELDS)
        kinds = {r["row"] for r in periods}
        assert kinds == {"client", "mec"}

    def test_summary_recomputable_from_period_file(self, tiny_path, tmp_path):
        out = tmp_path / "results"
        main(["run", str(tiny_path), "--policy", "proposed", "--out", str(out)])
        rows = read_csv(out / "proposed_c20000000_s7_periods.csv")
        clients = [r for r in rows if r["row"] == "client"]
        mecs = [r for r in rows if r["row"] == "mec"]
        ids = sorted({int(r["id"]) for r in clients})
        n_periods = max(int(r["period"]) for r in rows)
        td = float(rows[0]["td_s"])
        # Reduce in the same order the simulator does: per client over
        # ascending periods, then across clients.
        bits = sum(sum(int(r["delivered_bits"]) for r in clients
                       if int(r["id"]) == k) for k in ids)
        stall = sum(sum(float(r["stall_s"]) for r in clients
                        if int(r["id"]) == k) for k in ids)
        hits = sum(int(r["hits"]) for r in clients)
        reqs = sum(int(r["requests"]) for r in clients)
        summary = read_csv(out / "proposed_c20000000_s7_summary.csv")[0]
        assert summary["mean_throughput_bps"] == str(
            round(bits / (n_periods * td) / len(ids)))
        assert summary["hit_ratio"] == f"{hits / reqs:.6f}"
        assert summary["mean_frozen_s"] == f"{stall / len(ids):.6f}"
        assert summary["backhaul_bytes"] == str(
            sum(int(r["backhaul_bytes"]) for r in mecs))
        assert summary["intermec_bytes"] == str(
            sum(int(r["intermec_bytes"]) for r in mecs))

    def test_rerun_is_byte_identical(self, tiny_path, tmp_path):
        args = ["run", str(tiny_path), "--policy", "proposed", "wgdsf"]
        assert main(args + ["--out", str(tmp_path / "a")]) == 0
        assert main(args + ["--out", str(tmp_path / "b")]) == 0
        assert tree_bytes(tmp_path / "a") == tree_bytes(tmp_path / "b")

    def test_parallel_matches_serial(self, tiny_path, tmp_path):
        args = ["run", str(tiny_path), "--policy", "lru", "lfu", "none"]
        assert main(args + ["--out", str(tmp_path / "serial")]) == 0
        assert main(args + ["--jobs", "3", "--out", str(tmp_path / "par")]) == 0
        assert tree_bytes(tmp_path / "serial") == tree_bytes(tmp_path / "par")

    def test_size_sweep_reaches_summary(self, tiny_path, tmp_path):
        out = tmp_path / "results"
        code = main(["run", str(tiny_path), "--policy", "none",
                     "--sizes", "10e6", "20e6", "--out", str(out)])
        assert code == 0
        summary = read_csv(out / "summary.csv")
        assert [r["total_cache_bytes"] for r in summary] == ["10000000",
                                                             "20000000"]

    def test_failed_cell_writes_manifest(self, tiny_path, tmp_path, capsys):
        # A cache too small for the protected prefixes kills the proposed
        # policy's cell; the no-cache cell still completes.
        out = tmp_path / "results"
        code = main(["run", str(tiny_path), "--policy", "proposed", "none",
                     "--sizes", "20000", "--out", str(out)])
        assert code == 1
        assert "1 of 2 cells failed" in capsys.readouterr().err
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["completed"] == ["none_c20000_s7"]
        assert manifest["failed"][0]["cell"] == "proposed_c20000_s7"
        assert "Delta1Overflow" in manifest["failed"][0]["error"]
        # Partial outputs for the surviving cell are still on disk.
        assert (out / "none_c20000_s7_periods.csv").exists()
        assert [r["policy"] for r in read_csv(out / "summary.csv")] == ["none"]

    def test_unknown_policy_rejected(self, tiny_path, tmp_path, capsys):
        code = main(["run", str(tiny_path), "--policy", "fifo",
                     "--out", str(tmp_path / "r")])
        assert code == 1
        assert "unknown policies: fifo" in capsys.readouterr().err

    def test_bad_scenario_reports_errors(self, tmp_path, capsys):
        bad = tmp_path / "bad.scn"
        bad.write_text("[topology]\nn_clients = 5\n")
        code = main(["run", str(bad), "--out", str(tmp_path / "r")])
        assert code == 1
        err = capsys.readouterr().err
        assert "cache.total_size: missing" in err
        assert "seeds: empty" in err


class TestSolve:
    def test_solves_a_dump(self, tmp_path, capsys):
        path = tmp_path / "problem.txt"
        path.write_text("budgets 4 4\n"
                        "item 6.0 3 3\n"
                        "item 5.0 2 2\n"
                        "item 5.0 2 2\n")
        assert main(["solve", str(path)]) == 0
        result = json.loads(capsys.readouterr().out)
        assert result["selected"] == [1, 2]
        assert result["objective"] == pytest.approx(10.0)
        assert result["bytes_used"] == [4, 4]

    def test_dump_round_trips_through_the_command(self, tmp_path, capsys):
        problem = PlacementProblem(ps=(2.5, 1.0), sizes=(5, 4),
                                   link_bytes=((5, 0), (0, 4)),
                                   space_budget=9, link_budgets=(5, 4))
        path = tmp_path / "problem.txt"
        path.write_text(dump_problem(problem))
        assert main(["solve", str(path)]) == 0
        result = json.loads(capsys.readouterr().out)
        assert result["selected"] == [0, 1]

    def test_bad_dump_is_an_error(self, tmp_path, capsys):
        path = tmp_path / "problem.txt"
        path.write_text("item 1.0 1 1\n")
        assert main(["solve", str(path)]) == 1
        assert "bad problem file" in capsys.readouterr().err


class TestPlumbing:
    def test_log_level_parsing(self):
        assert _log_level("debug") == logging.DEBUG
        assert _log_level("INFO") == logging.INFO
        assert _log_level("nonsense") == logging.WARNING
        assert _log_level(None) == logging.WARNING

    def test_parser_defaults(self):
        args = build_parser().parse_args(["run", "x.scn"])
        assert args.jobs == 1 and args.out == "results"
        assert args.policy is None and args.sizes is None

    def test_repeated_sweep_flags_extend(self):
        # a second --policy/--sizes/--seeds must add, not replace
        args = build_parser().parse_args(
            ["run", "x.scn", "--policy", "proposed", "--policy", "none",
             "--sizes", "10e6", "20e6", "--sizes", "40e6",
             "--seeds", "1", "--seeds", "2", "3"])
        assert args.policy == ["proposed", "none"]
        assert args.sizes == [10_000_000, 20_000_000, 40_000_000]
        assert args.seeds == [1, 2, 3]
