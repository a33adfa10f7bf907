"""Period-driven simulation of a cooperative edge cache cluster.

Ties the other modules together: clients attach to eNodeBs, eNodeBs to
MEC servers, and each short period runs placement (policy-dependent),
then a sliced fluid-flow delivery pass, then end-of-period bookkeeping.
Cache-update transfers are charged against per-link byte budgets;
segment delivery instead shares link capacity among concurrent readers.
All randomness comes from four spawned streams (placement, demand
history, workload, fading), so a (scenario, policy, seed) triple always
reproduces the same metrics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .baselines import BASELINE_NAMES, make_policy
from .cache import (CacheEntry, DELTA1, DELTA3, Key, MecCache,
                    evict_for_space, initial_fill, partition_for,
                    refresh_delta1, update_delete_priorities)
from .catalog import PopularitySet, allocate_cache_sizes, build_catalog, popularity_set
from .clients import ClientState
from .coop import (AvailabilityView, CLOUD, TransferBudget,
                   aggregate_utilities, pick_neighbor_source)
from .scenario import Scenario, TopologyConfig
from .solver import branch_and_bound, problem_from_candidates
from .workload import WorkloadGenerator, synthesize_demand_history

POLICY_NAMES = ("proposed",) + BASELINE_NAMES + ("none",)


# -- radio model -----------------------------------------------------------

def pathloss_db(distance_m: float, anchor_db: float, exponent: float) -> float:
    """Log-distance pathloss, anchored at one metre."""
    return anchor_db + 10.0 * exponent * math.log10(max(distance_m, 1.0))


def radio_capacity(bandwidth_hz: float, tx_power_dbm: float, loss_db: float,
                   noise_dbm: float, attached: int) -> float:
    """Shannon rate of one client under round-robin airtime sharing.

    ``loss_db`` is the total link loss (pathloss plus shadowing); the
    eNodeB's bandwidth is split evenly across its attached clients.
    """
    snr_db = tx_power_dbm - loss_db - noise_dbm
    share = bandwidth_hz / max(attached, 1)
    return share * math.log2(1.0 + 10.0 ** (snr_db / 10.0))


# -- topology --------------------------------------------------------------

@dataclass(frozen=True)
class Topology:
    """Static attachment map for one run: client -> eNodeB -> MEC."""

    mec_of_enodeb: tuple[int, ...]
    enodeb_of_client: tuple[int, ...]
    region_of_client: tuple[int, ...]
    client_enodeb_m: tuple[float, ...]
    attached: tuple[int, ...]  # clients per eNodeB
    n_mecs: int

    def region_clients(self, q: int) -> list[int]:
        return [k for k, r in enumerate(self.region_of_client) if r == q]


def build_topology(config: TopologyConfig,
                   rng: np.random.Generator) -> Topology:
    """Drop clients uniformly in the area and attach everything by distance.

    Each client joins its nearest eNodeB and each eNodeB its nearest MEC
    (ties to the lower index), so a client's serving region is fixed for
    the whole run.
    """
    xmin, ymin, xmax, ymax = config.area
    n = config.n_clients
    xs = rng.uniform(xmin, xmax, n)
    ys = rng.uniform(ymin, ymax, n)
    enbs = np.asarray(config.enodeb_positions, dtype=float)
    mecs = np.asarray(config.mec_positions, dtype=float)
    mec_of_enodeb = tuple(
        int(np.argmin(np.hypot(mecs[:, 0] - ex, mecs[:, 1] - ey)))
        for ex, ey in enbs)
    enodeb_of_client = []
    client_enodeb_m = []
    for k in range(n):
        d = np.hypot(enbs[:, 0] - xs[k], enbs[:, 1] - ys[k])
        b = int(np.argmin(d))
        enodeb_of_client.append(b)
        client_enodeb_m.append(float(d[b]))
    attached = [0] * len(config.enodeb_positions)
    for b in enodeb_of_client:
        attached[b] += 1
    return Topology(
        mec_of_enodeb=mec_of_enodeb,
        enodeb_of_client=tuple(enodeb_of_client),
        region_of_client=tuple(mec_of_enodeb[b] for b in enodeb_of_client),
        client_enodeb_m=tuple(client_enodeb_m),
        attached=tuple(attached),
        n_mecs=len(config.mec_positions),
    )


# -- metrics ---------------------------------------------------------------

@dataclass(frozen=True)
class PeriodRecord:
    """Everything that happened in one short period, as deltas."""

    period: int  # 1-based
    delivered_bits: tuple[int, ...]    # per client
    stall_s: tuple[float, ...]         # per client
    requests: tuple[int, ...]          # per client
    hits: tuple[int, ...]              # per client
    backhaul_bytes: tuple[int, ...]    # per MEC, delivery plus cache fills
    intermec_bytes: tuple[int, ...]    # per MEC, delivery plus cache fills
    fill_bytes: Mapping[tuple[int, int], int]  # (mec, source) -> update bytes


class MetricsLog:
    """Per-period records of one run plus the usual summary reductions."""

    def __init__(self, n_clients: int, n_mecs: int, td_s: float,
                 client_regions: tuple[int, ...]):
        self.n_clients = n_clients
        self.n_mecs = n_mecs
        self.td_s = td_s
        self.client_regions = client_regions
        self.records: list[PeriodRecord] = []

    def add(self, record: PeriodRecord) -> None:
        self.records.append(record)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MetricsLog):
            return NotImplemented
        return (self.n_clients == other.n_clients
                and self.n_mecs == other.n_mecs
                and self.td_s == other.td_s
                and self.client_regions == other.client_regions
                and self.records == other.records)

    @property
    def n_periods(self) -> int:
        return len(self.records)

    def per_client_delivered_bits(self) -> tuple[int, ...]:
        return tuple(sum(r.delivered_bits[k] for r in self.records)
                     for k in range(self.n_clients))

    def per_client_stall_s(self) -> tuple[float, ...]:
        return tuple(sum(r.stall_s[k] for r in self.records)
                     for k in range(self.n_clients))

    def total_requests(self) -> int:
        return sum(sum(r.requests) for r in self.records)

    def total_hits(self) -> int:
        return sum(sum(r.hits) for r in self.records)

    def total_backhaul_bytes(self) -> int:
        return sum(sum(r.backhaul_bytes) for r in self.records)

    def total_intermec_bytes(self) -> int:
        return sum(sum(r.intermec_bytes) for r in self.records)

    def mean_throughput_bps(self) -> float:
        """Delivered bits per second of wall time, averaged over clients."""
        if not self.records or self.n_clients == 0:
            return 0.0
        wall = self.n_periods * self.td_s
        return sum(self.per_client_delivered_bits()) / wall / self.n_clients

    def hit_ratio(self) -> float:
        total = self.total_requests()
        return self.total_hits() / total if total else 0.0

    def mean_frozen_s(self) -> float:
        """Total stalled seconds per client over the whole run."""
        if self.n_clients == 0:
            return 0.0
        return sum(self.per_client_stall_s()) / self.n_clients

    def fill_totals(self) -> dict[tuple[int, int], int]:
        totals: dict[tuple[int, int], int] = {}
        for record in self.records:
            for link, size in record.fill_bytes.items():
                totals[link] = totals.get(link, 0) + size
        return totals


class _LandedKeys:
    """Availability snapshot of one cache: landed (not in-flight) keys only."""

    __slots__ = ("_keys",)

    def __init__(self, cache: MecCache):
        self._keys = frozenset(k for k, e in cache.entries.items()
                               if not e.in_flight)

    def __contains__(self, key: Key) -> bool:
        return key in self._keys


# -- the world -------------------------------------------------------------

class World:
    """One (scenario, policy, seed) run: builds state, then steps periods."""

    def __init__(self, scenario: Scenario, policy_name: str, seed: int):
        if policy_name not in POLICY_NAMES:
            raise ValueError(f"unknown policy: {policy_name!r}")
        self.scenario = scenario
        self.policy_name = policy_name
        self.seed = seed
        self.catalog = build_catalog(scenario.catalog)
        base_pop = popularity_set(self.catalog, scenario.catalog.popular_fraction)
        self.pop = base_pop
        self._initial_rank = {vid: i for i, vid in enumerate(base_pop.order)}

        seq = np.random.SeedSequence(seed)
        placement_seq, history_seq, workload_seq, fading_seq = seq.spawn(4)
        self.topology = build_topology(scenario.topology,
                                       np.random.default_rng(placement_seq))
        self._fading = np.random.default_rng(fading_seq)
        self.n_mecs = self.topology.n_mecs
        self.regions = {q: self.topology.region_clients(q)
                        for q in range(self.n_mecs)}
        n_clients = scenario.topology.n_clients
        history = synthesize_demand_history(
            self.catalog, base_pop, scenario.workload, n_clients,
            scenario.history_sessions, history_seq)
        # The workload keeps the catalog-rank popularity for the whole run;
        # only the caching side re-estimates it from observed requests.
        self.workload = WorkloadGenerator(self.catalog, base_pop,
                                          scenario.workload, n_clients,
                                          workload_seq)

        if policy_name == "none":
            self.mec_sizes = {q: 0 for q in range(self.n_mecs)}
        elif scenario.cache.mec_sizes is not None:
            self.mec_sizes = dict(enumerate(scenario.cache.mec_sizes))
        else:
            self.mec_sizes = allocate_cache_sizes(
                history, scenario.cache.total_size, self.regions, self.catalog)

        self.clients = [
            ClientState(k, self.topology.region_of_client[k],
                        self.topology.enodeb_of_client[k],
                        fps=scenario.catalog.fps)
            for k in range(n_clients)
        ]

        self.caches: dict[int, MecCache] = {}
        self.policies: dict[int, object] = {}
        for q in range(self.n_mecs):
            counts = history.region_counts(self.regions[q])
            if policy_name == "none":
                cache = MecCache(q, 0, partitioned=False)
            elif policy_name == "proposed":
                cache = MecCache(q, self.mec_sizes[q], partitioned=True)
                initial_fill(cache, self.catalog, base_pop, counts)
            else:
                # Baselines start from the same warm contents, flattened
                # into a single pool, so policy comparisons share a start.
                warm = MecCache(q, self.mec_sizes[q], partitioned=True)
                initial_fill(warm, self.catalog, base_pop, counts)
                cache = MecCache(q, self.mec_sizes[q], partitioned=False)
                for entry in warm.entries.values():
                    cache.add(CacheEntry(entry.key, entry.size, DELTA3))
                params = scenario.policy
                policy = make_policy(policy_name, self.catalog,
                                     wgdsf_w_time=params.wgdsf_w_time,
                                     wgdsf_w_doc=params.wgdsf_w_doc,
                                     wgdsf_half_life=params.wgdsf_half_life,
                                     rbcc_discount=params.rbcc_discount)
                policy.adopt_contents(cache)
                self.policies[q] = policy
            self.caches[q] = cache

        self.neighbor_ids = {
            q: sorted(p for p in scenario.coop.link_rates(q, self.n_mecs)
                      if p != CLOUD)
            for q in range(self.n_mecs)
        }
        self.pending_delta1: dict[int, list[Key]] = {q: [] for q in range(self.n_mecs)}
        self.video_counts: dict[int, int] = {}
        self.metrics = MetricsLog(n_clients, self.n_mecs,
                                  scenario.periods.td_s,
                                  self.topology.region_of_client)

    # -- period loop -------------------------------------------------------

    def run(self) -> MetricsLog:
        for period in range(1, self.scenario.periods.n_periods + 1):
            self.run_period(period)
        return self.metrics

    def run_period(self, period: int) -> None:
        params = self.scenario.policy
        start_bits = [c.delivered_bits for c in self.clients]
        start_stall = [c.stall_s for c in self.clients]
        backhaul = [0] * self.n_mecs
        intermec = [0] * self.n_mecs
        fills: dict[tuple[int, int], int] = {}
        requests = [0] * len(self.clients)
        hits = [0] * len(self.clients)

        self._update_radio()
        if self.policy_name == "proposed":
            self._place_proposed(period, backhaul, intermec, fills)
        elif self.policy_name != "none":
            self._place_baseline(backhaul, intermec, fills)
        self._deliver(requests, hits, backhaul, intermec)

        # Everything fetched this period is usable from the next one on.
        for cache in self.caches.values():
            for entry in cache.entries.values():
                entry.in_flight = False
        if self.policy_name == "proposed":
            for q, cache in self.caches.items():
                region = [self.clients[k] for k in self.regions[q]]
                if region:
                    update_delete_priorities(cache, region, self.catalog,
                                             params.zeta, params.alpha,
                                             params.lam)
        for client in self.clients:
            client.reset_period_counts()
        for cache in self.caches.values():
            cache.check_invariants()

        self.metrics.add(PeriodRecord(
            period=period,
            delivered_bits=tuple(c.delivered_bits - b
                                 for c, b in zip(self.clients, start_bits)),
            stall_s=tuple(c.stall_s - s
                          for c, s in zip(self.clients, start_stall)),
            requests=tuple(requests),
            hits=tuple(hits),
            backhaul_bytes=tuple(backhaul),
            intermec_bytes=tuple(intermec),
            fill_bytes=fills,
        ))

    # -- per-period pieces ---------------------------------------------------

    def _update_radio(self) -> None:
        top = self.scenario.topology
        sigma = top.shadow_sigma_db
        for client in self.clients:
            shadow = float(self._fading.normal(0.0, sigma)) if sigma > 0 else 0.0
            loss = pathloss_db(self.topology.client_enodeb_m[client.client_id],
                               top.pathloss_anchor_db,
                               top.pathloss_exponent) + shadow
            client.radio_bps = radio_capacity(
                top.bandwidth_hz, top.tx_power_dbm, loss, top.noise_dbm,
                self.topology.attached[client.enodeb])

    def _head_requests(self, q: int) -> list[tuple[ClientState, Key]]:
        """What each of the region's clients needs next, in client order."""
        heads = []
        for k in self.regions[q]:
            client = self.clients[k]
            if client.download is not None:
                heads.append((client, client.download[0].key))
            else:
                heads.append((client, self.workload.peek(k).key))
        return heads

    def _snapshot_view(self) -> AvailabilityView:
        return AvailabilityView({q: _LandedKeys(c)
                                 for q, c in self.caches.items()})

    def _refresh_popular(self) -> None:
        """Re-rank videos by requests observed so far (ties keep old order)
        and re-anchor every protected partition to the new popular set."""
        order = sorted(self._initial_rank,
                       key=lambda vid: (-self.video_counts.get(vid, 0),
                                        self._initial_rank[vid]))
        self.pop = PopularitySet(order=tuple(order),
                                 popular_count=self.pop.popular_count)
        for q in range(self.n_mecs):
            _fc, missing, _evicted = refresh_delta1(self.caches[q], self.pop,
                                                    self.catalog)
            self.pending_delta1[q] = missing

    def _charge_fill(self, q: int, source: int, size: int,
                     backhaul: list[int], intermec: list[int],
                     fills: dict[tuple[int, int], int]) -> None:
        fills[(q, source)] = fills.get((q, source), 0) + size
        if source == CLOUD:
            backhaul[q] += size
        else:
            intermec[q] += size

    def _reserve_delta1(self, q: int, view: AvailabilityView,
                        budget: TransferBudget, backhaul: list[int],
                        intermec: list[int],
                        fills: dict[tuple[int, int], int]) -> None:
        """Fetch missing protected-prefix segments before anything else.

        Keys whose fetch no link can afford this period stay pending and
        are retried next period.
        """
        cache = self.caches[q]
        still_pending: list[Key] = []
        for key in self.pending_delta1[q]:
            if key in cache:
                continue
            size = self.catalog.size(*key)
            source = pick_neighbor_source(key, view, budget,
                                          self.neighbor_ids[q], size)
            if source is None:
                still_pending.append(key)
                continue
            budget.take(source, size)
            cache.add(CacheEntry(key, size, DELTA1, in_flight=True))
            self._charge_fill(q, source, size, backhaul, intermec, fills)
        self.pending_delta1[q] = still_pending

    def _place_proposed(self, period: int, backhaul: list[int],
                        intermec: list[int],
                        fills: dict[tuple[int, int], int]) -> None:
        scn = self.scenario
        if (period - 1) % scn.periods.gammas_per_j == 0:
            self._refresh_popular()
        view = self._snapshot_view()
        for q in range(self.n_mecs):
            cache = self.caches[q]
            budget = TransferBudget(scn.coop.link_rates(q, self.n_mecs),
                                    scn.periods.td_s)
            self._reserve_delta1(q, view, budget, backhaul, intermec, fills)
            candidates, _deferred = aggregate_utilities(
                self._head_requests(q), cache, view, self.neighbor_ids[q],
                self.catalog, scn.policy.omega, budget)
            # Protected-prefix keys are handled by the refresh path, and
            # zero-utility items cannot improve the objective.
            candidates = [item for item in candidates if item.ps > 0
                          and partition_for(item.key, self.pop,
                                            self.catalog) != DELTA1]
            if len(candidates) > scn.policy.max_candidates:
                candidates.sort(key=lambda item: (-item.ps, item.key))
                candidates = candidates[:scn.policy.max_candidates]
            if not candidates:
                continue
            problem, _keys = problem_from_candidates(
                candidates, self.neighbor_ids[q], cache.sc,
                dict(budget.remaining))
            solution = branch_and_bound(problem)
            chosen = [candidates[j] for j in solution.selected]
            need = sum(item.size for item in chosen) - (cache.sc
                                                        - cache.used_delta23)
            if need > 0:
                evict_for_space(cache, need)
            for item in chosen:
                budget.take(item.source, item.size)
                tag = partition_for(item.key, self.pop, self.catalog)
                cache.add(CacheEntry(item.key, item.size, tag,
                                     in_flight=True))
                self._charge_fill(q, item.source, item.size, backhaul,
                                  intermec, fills)

    def _place_baseline(self, backhaul: list[int], intermec: list[int],
                        fills: dict[tuple[int, int], int]) -> None:
        scn = self.scenario
        view = self._snapshot_view()
        for q in range(self.n_mecs):
            cache = self.caches[q]
            budget = TransferBudget(scn.coop.link_rates(q, self.n_mecs),
                                    scn.periods.td_s)
            keys = [key for _client, key in self._head_requests(q)]
            decision = self.policies[q].decide(cache, keys, view,
                                               self.neighbor_ids[q], budget)
            for key in decision.evictions:
                cache.remove(key)
            for ins in decision.insertions:
                budget.take(ins.source, ins.size)
                cache.add(CacheEntry(ins.key, ins.size, DELTA3,
                                     in_flight=True))
                self._charge_fill(q, ins.source, ins.size, backhaul,
                                  intermec, fills)

    # -- delivery ------------------------------------------------------------

    def _delivery_source(self, region: int, key: Key) -> int | None:
        """Where a request is served from right now: None for the local
        cache, else the lowest-id linked neighbor holding a landed copy,
        else the origin."""
        entry = self.caches[region].entries.get(key)
        if entry is not None and not entry.in_flight:
            return None
        for p in self.neighbor_ids[region]:
            other = self.caches[p].entries.get(key)
            if other is not None and not other.in_flight:
                return p
        return CLOUD

    def _start_download(self, client: ClientState, requests: list[int],
                        hits: list[int]) -> None:
        req = self.workload.peek(client.client_id)
        key = req.key
        client.record_request(key)
        self.video_counts[req.video_id] = self.video_counts.get(req.video_id, 0) + 1
        requests[client.client_id] += 1
        source = self._delivery_source(client.region, key)
        if source is None:
            hits[client.client_id] += 1
        client.download = (req, float(self.catalog.size(*key)), source)

    def _deliver(self, requests: list[int], hits: list[int],
                 backhaul: list[int], intermec: list[int]) -> None:
        """Advance all downloads and playback through one period.

        The period is cut into slices; per slice each busy fetch link is
        shared evenly by the downloads using it at the slice start, and a
        client finishing a segment chains into its next request within
        the same slice.  Completed segments update the client's capacity
        estimate at the rate they actually saw.
        """
        scn = self.scenario
        n_slices = max(1, round(scn.periods.td_s / scn.periods.slice_s))
        dt = scn.periods.td_s / n_slices
        link_rates = {q: scn.coop.link_rates(q, self.n_mecs)
                      for q in range(self.n_mecs)}
        max_buffer = scn.policy.max_buffer_s
        frames = self.catalog.frames_per_segment
        for _ in range(n_slices):
            for client in self.clients:
                if client.download is None and client.buffer_time_s < max_buffer:
                    self._start_download(client, requests, hits)
            users: dict[tuple[int, int], int] = {}
            for client in self.clients:
                if client.download is not None and client.download[2] is not None:
                    link = (client.region, client.download[2])
                    users[link] = users.get(link, 0) + 1
            for client in self.clients:
                if client.download is None:
                    continue
                budget_s = dt
                while budget_s > 1e-12 and client.download is not None:
                    req, remaining, source = client.download
                    rate = client.radio_bps
                    if source is not None:
                        link = (client.region, source)
                        share = link_rates[client.region][source] / users.get(link, 1)
                        rate = min(rate, share)
                    if rate <= 0:
                        break
                    need_s = remaining * 8.0 / rate
                    if need_s > budget_s:
                        client.download = (req, remaining - rate * budget_s / 8.0,
                                           source)
                        break
                    budget_s -= need_s
                    size = self.catalog.size(req.video_id, req.segment, req.level)
                    client.record_delivery(size, 8.0 * size / rate, frames)
                    if source == CLOUD:
                        backhaul[client.region] += size
                    elif source is not None:
                        intermec[client.region] += size
                    self.workload.advance(client.client_id)
                    if (self.workload.session_ended(client.client_id)
                            and self.workload.was_abandoned(client.client_id)):
                        client.drop_buffer()
                    client.download = None
                    if client.buffer_time_s < max_buffer:
                        self._start_download(client, requests, hits)
            for client in self.clients:
                client.advance_playback(dt)


def run_experiment(scenario: Scenario, policy_name: str,
                   seed: int) -> MetricsLog:
    """Run one cell of a sweep and return its per-period metrics."""
    return World(scenario, policy_name, seed).run()
