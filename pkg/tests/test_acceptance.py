"""Whole-artifact acceptance gates, one test per shipping criterion.

Each test is deliberately end-to-end and self-checking: hand arithmetic
for the scoring formulas, an exhaustive oracle for the solver, in-loop
invariant sweeps for budget conservation, and the full desk-scenario
sweep for ordering and reproducibility.  Runtimes are asserted where the
criterion carries a budget.
"""

from __future__ import annotations

import csv
import math
import time
from pathlib import Path

import numpy as np
import pytest

from edgecache.cache import MecCache, delete_priority, smooth_delete_priority
from edgecache.catalog import (CatalogConfig, allocate_cache_sizes,
                               build_catalog, popularity_set)
from edgecache.cli import main
from edgecache.clients import cache_priority, match_indicator
from edgecache.coop import (CLOUD, AvailabilityView, TransferBudget,
                            aggregate_utilities, client_utility)
from edgecache.scenario import load_scenario
from edgecache.sim import World
from edgecache.solver import (PlacementProblem, branch_and_bound,
                              brute_force_oracle)
from edgecache.workload import WorkloadConfig, synthesize_demand_history

from conftest import make_client

SCENARIO_DIR = Path(__file__).resolve().parents[1] / "scenarios"
SWEEP_SIZES = ("40e6", "80e6", "140e6", "200e6")

approx9 = lambda x: pytest.approx(x, rel=1e-9)


# -- shared expensive sweep --------------------------------------------------

@pytest.fixture(scope="session")
def desk_sweep(tmp_path_factory):
    """The full desk sweep, run twice through the real CLI."""
    first = tmp_path_factory.mktemp("sweep-first")
    second = tmp_path_factory.mktemp("sweep-second")
    for out in (first, second):
        code = main(["run", str(SCENARIO_DIR / "desk.scn"),
                     "--sizes", *SWEEP_SIZES, "--out", str(out)])
        assert code == 0
    return first, second


def read_summary(path: Path) -> list[dict[str, str]]:
    with open(path, newline="") as handle:
        return list(csv.DictReader(handle))


# -- criteria ---------------------------------------------------------------

def test_solver_agrees_with_exhaustive_enumeration():
    # 500 random instances of up to 22 items over two neighbor links and
    # one origin link; utilities are dyadic rationals so equal objectives
    # are bit-equal, not merely close.  The whole sweep must stay under a
    # minute.
    rng = np.random.default_rng(20260814)
    started = time.monotonic()
    for _ in range(500):
        n = int(rng.integers(1, 23))
        sizes = [int(v) for v in rng.integers(1, 500, n)]
        link_bytes = []
        for j in range(n):
            row = [0, 0, 0]
            row[int(rng.integers(0, 3))] = sizes[j]
            link_bytes.append(tuple(row))
        ps = tuple(float(int(rng.integers(1, 2 ** 24))) / 2 ** 20
                   for _ in range(n))
        total = sum(sizes)
        problem = PlacementProblem(
            ps=ps, sizes=tuple(sizes), link_bytes=tuple(link_bytes),
            space_budget=int(rng.integers(0, total + 1)),
            link_budgets=tuple(int(rng.integers(0, total + 1))
                               for _ in range(3)))
        solution = branch_and_bound(problem)
        oracle_objective, _selection = brute_force_oracle(problem)
        assert solution.objective == oracle_objective
    assert time.monotonic() - started < 60.0


def test_scoring_formulas_match_hand_arithmetic(grid_catalog):
    # Capacity match is inclusive.
    assert match_indicator(2e6, 1e6) == 1
    assert match_indicator(1e6, 2e6) == 0
    assert match_indicator(1e6, 1e6) == 1

    # Urgency scoring: exponential on the urgent branch, exact zero when
    # the buffer covers the transfer, urgent whenever no capacity estimate
    # exists yet.
    assert cache_priority(0.0, 10 ** 6, 1.0, 2.0) == approx9(math.e ** 2 - 1)
    assert cache_priority(1.0, 10 ** 6, 1.0, 2.0) == approx9(math.e - 1)
    assert cache_priority(10.0, 10 ** 6, 4e6, 2.0) == 0.0
    assert cache_priority(5.0, 10, 0.0, 2.0) > 0.0

    # Per-entry delete priority, averaged over the region's clients.
    key = (0, 1, 1)
    rate = grid_catalog.rate(1)
    idle = make_client(cp_bps=rate / 2)          # no match, no requests
    assert delete_priority(key, rate, [idle], 0.8, 0.5) == approx9(1 / 0.5)
    matching = make_client(cp_bps=rate)           # inclusive match
    assert delete_priority(key, rate, [matching], 0.8, 0.5) == approx9(1 / 1.3)
    busy = make_client(cp_bps=rate)
    for _ in range(3):
        busy.record_request(key)
    both = [busy, idle]
    assert delete_priority(key, rate, both, 0.8, 0.5) == approx9(
        (1 / 4.3 + 1 / 0.5) / 2)

    # Period-to-period smoothing, including the first-period passthrough
    # and the constant fixed point.
    assert smooth_delete_priority(1.0, 2.0, 0.8) == approx9(1.8)
    assert smooth_delete_priority(1.0, 2.0, 1.0) == approx9(2.0)
    assert smooth_delete_priority(None, 2.0, 0.8) == approx9(2.0)
    value = 9.0
    for _ in range(60):
        value = smooth_delete_priority(value, 3.0, 0.8)
    assert value == approx9(3.0)

    # A local-miss request is worth double when no neighbor covers it.
    assert client_utility(1.0, (1,)) == approx9(1.0)
    assert client_utility(1.0, (0, 0)) == approx9(2.0)
    assert client_utility(0.0, (0,)) == 0.0

    # Aggregation sums the per-client utilities of one key and drops
    # locally cached requests.
    cache = MecCache(0, 10 ** 6, partitioned=False)
    neighbor = MecCache(1, 10 ** 6, partitioned=False)
    view = AvailabilityView({0: cache, 1: neighbor})
    budget = TransferBudget({1: 1e9, CLOUD: 1e9}, 10.0)
    a = make_client(cp_bps=1e6, buffer_s=0.0)
    b = make_client(client_id=1, cp_bps=2e6, buffer_s=1.0)
    items, deferred = aggregate_utilities(
        [(a, key), (b, key)], cache, view, [1], grid_catalog, 2.0, budget)
    assert deferred == []
    assert len(items) == 1
    size = grid_catalog.size(*key)
    want = sum(2 * cache_priority(c.buffer_time_s, size, c.cp_hat, 2.0)
               for c in (a, b))
    assert items[0].ps == approx9(want)

    rng = np.random.default_rng(404)
    requests = []
    for i in range(40):
        client = make_client(client_id=i, cp_bps=float(rng.uniform(1e5, 2e6)),
                             buffer_s=float(rng.uniform(0, 8)))
        requests.append((client, (int(rng.integers(0, 4)),
                                  int(rng.integers(1, 11)),
                                  int(rng.integers(1, 4)))))
    items, deferred = aggregate_utilities(requests, cache, view, [1],
                                          grid_catalog, 2.0, budget)
    assert deferred == []
    total = 0.0
    for client, k in requests:
        pr = cache_priority(client.buffer_time_s, grid_catalog.size(*k),
                            client.cp_hat, 2.0)
        total += client_utility(pr, view.chi(k, [1]))
    assert sum(item.ps for item in items) == pytest.approx(total, rel=1e-9)


def test_budgets_and_partitions_conserved_every_period():
    # Every period of the partitioned scheme on the desk scenario, over
    # three seeds: capacity, per-partition budgets, their sum, and the
    # per-link update-byte budgets, with zero violations allowed.
    scenario = load_scenario(SCENARIO_DIR / "desk.scn")
    assert scenario.periods.n_j >= 10
    started = time.monotonic()
    violations = []
    for seed in scenario.seeds:
        world = World(scenario, "proposed", seed)
        for period in range(1, scenario.periods.n_periods + 1):
            world.run_period(period)
            for q, cache in world.caches.items():
                try:
                    cache.check_invariants()
                except AssertionError as exc:
                    violations.append((seed, period, q, str(exc)))
                if cache.sh + cache.sc != cache.capacity:
                    violations.append((seed, period, q, "budget split"))
                if cache.used() > cache.capacity:
                    violations.append((seed, period, q, "over capacity"))
            record = world.metrics.records[-1]
            for (q, src), size in record.fill_bytes.items():
                rates = scenario.coop.link_rates(q, world.n_mecs)
                if size > math.floor(rates[src] * scenario.periods.td_s / 8):
                    violations.append((seed, period, q, f"link {src} budget"))
    assert violations == []
    assert time.monotonic() - started < 120.0


def test_cache_size_sweep_reproduces_expected_ordering(desk_sweep):
    rows = read_summary(desk_sweep[0] / "summary.csv")
    sizes = sorted({int(r["total_cache_bytes"]) for r in rows})
    policies = sorted({r["policy"] for r in rows})
    assert len(sizes) == 4 and len(policies) == 6

    mean = {}
    for policy in policies:
        for total in sizes:
            cells = [r for r in rows if r["policy"] == policy
                     and int(r["total_cache_bytes"]) == total]
            assert len(cells) == 3
            mean[policy, total] = {
                "thr": sum(float(c["mean_throughput_bps"]) for c in cells) / 3,
                "hit": sum(float(c["hit_ratio"]) for c in cells) / 3,
                "frozen": sum(float(c["mean_frozen_s"]) for c in cells) / 3,
                "backhaul": sum(float(c["backhaul_bytes"]) for c in cells) / 3,
            }

    # (a) more cache never hurts throughput or hit ratio beyond seed
    # noise (2% relative) for any policy.
    for policy in policies:
        for small, large in zip(sizes, sizes[1:]):
            for metric in ("thr", "hit"):
                low = mean[policy, small][metric]
                high = mean[policy, large][metric]
                assert high >= low * 0.98, (policy, metric, small, large)

    # (b) at the largest size the partitioned cooperative scheme leads on
    # the good metrics and trails on the bad ones.
    top = sizes[-1]
    ours = mean["proposed", top]
    for policy in ("lru", "lfu", "wgdsf", "rbcc"):
        theirs = mean[policy, top]
        assert ours["thr"] >= theirs["thr"], policy
        assert ours["hit"] >= theirs["hit"], policy
        assert ours["frozen"] <= theirs["frozen"], policy
        assert ours["backhaul"] <= theirs["backhaul"], policy

    # (c) with caching disabled there are no hits and the worst stalls of
    # the entire grid, run by run.
    none_rows = [r for r in rows if r["policy"] == "none"]
    other_rows = [r for r in rows if r["policy"] != "none"]
    assert all(float(r["hit_ratio"]) == 0.0 for r in none_rows)
    worst_other = max(float(r["mean_frozen_s"]) for r in other_rows)
    assert min(float(r["mean_frozen_s"]) for r in none_rows) >= worst_other


def test_sweep_outputs_are_byte_identical_across_reruns(desk_sweep):
    first, second = desk_sweep
    names = sorted(p.name for p in first.iterdir())
    assert names == sorted(p.name for p in second.iterdir())
    assert "summary.csv" in names
    assert len([n for n in names if n.endswith("_periods.csv")]) == 72
    for name in names:
        assert (first / name).read_bytes() == (second / name).read_bytes(), name


def test_allocation_is_proportional_and_exhausts_the_budget():
    catalog = build_catalog(CatalogConfig(
        n_videos=10, segments_min=6, segments_max=12,
        rates_bps=(200e3, 400e3, 800e3), seed=17))
    pop = popularity_set(catalog, 0.2)
    config = WorkloadConfig(zipf_theta=0.9, abandon_prob=0.5)
    rng = np.random.default_rng(5150)
    for trial in range(50):
        n_clients = int(rng.integers(4, 30))
        n_regions = int(rng.integers(1, 5))
        history = synthesize_demand_history(catalog, pop, config, n_clients,
                                            int(rng.integers(1, 8)),
                                            int(rng.integers(0, 2 ** 31)))
        # Every region gets one pinned client so no region is empty.
        regions = {q: [q] for q in range(n_regions)}
        for k in range(n_regions, n_clients):
            regions[int(rng.integers(0, n_regions))].append(k)
        total = int(rng.integers(1, 10 ** 9))
        sizes = allocate_cache_sizes(history, total, regions, catalog)
        assert sum(sizes.values()) == total
        weights = {q: history.weighted_bytes(regions[q], catalog)
                   for q in regions}
        scale = sum(weights.values())
        for q in regions:
            assert abs(sizes[q] - total * weights[q] / scale) <= 1.0
