"""Comparison cache policies behind a single reactive decide() interface.

Each policy treats the MEC cache as one undivided pool and reacts to the
head-of-queue requests sampled at the start of a period: a miss schedules
the segment for insertion, displacing the lowest-ranked resident entries
until it fits.  The ranking function is the only thing that differs
between policies; the shared loop lives in ReactivePolicy.decide().

Byte budgets for the resulting transfers are not enforced here.  decide()
resolves a source for every insertion against a scratch copy of the link
budget (via the same pick_source helper the proposed policy uses) and the
simulation layer charges the real budget when it executes the decision.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .cache import Key, MecCache
from .catalog import VideoCatalog
from .coop import CLOUD, AvailabilityView, TransferBudget, pick_source

BASELINE_NAMES = ("lru", "lfu", "wgdsf", "rbcc")


@dataclass(frozen=True)
class Insertion:
    key: Key
    size: int
    source: int  # neighbor MEC id, or CLOUD


@dataclass
class PolicyDecision:
    """Evictions are applied before insertions; both lists are duplicate
    free, but a key may appear in both (evict stale copy, refetch)."""

    insertions: list[Insertion] = field(default_factory=list)
    evictions: list[Key] = field(default_factory=list)


class ReactivePolicy:
    """Shared miss-driven insert/evict loop; subclasses supply the rank."""

    name = "reactive"

    def __init__(self, catalog: VideoCatalog):
        self.catalog = catalog
        self.clock = 0   # one tick per observed request
        self.period = 0  # one tick per decide() call
        self._view: AvailabilityView | None = None
        self._neighbors: list[int] = []

    # -- bookkeeping hooks, overridden per policy -----------------------

    def register_seed(self, key: Key, size: int) -> None:
        """Adopt one entry that was placed before the policy took over."""

    def on_request(self, key: Key, resident: bool) -> None:
        """Record one observed request (hit or miss)."""

    def on_insert(self, key: Key, size: int) -> None:
        pass

    def on_evict(self, key: Key, size: int, rank_value: tuple) -> None:
        pass

    def rank(self, key: Key, size: int) -> tuple:
        """Sort key for eviction; the smallest rank is evicted first."""
        raise NotImplementedError

    def admits(self, key: Key, size: int, candidates: list) -> bool:
        """May this miss displace resident entries when space is short?

        candidates holds (rank, key, size, pending) rows in ascending
        rank order; it is never empty when this is called.
        """
        return True

    # -- shared machinery ------------------------------------------------

    def adopt_contents(self, cache: MecCache) -> None:
        for key, entry in cache.entries.items():
            self.register_seed(key, entry.size)

    def _pick(self, key: Key, size: int, remaining: dict | None) -> int | None:
        if self._view is None:
            if remaining is not None and remaining.get(CLOUD, 0) < size:
                return None
            return CLOUD
        if remaining is None:
            ample = {p: size for p in self._neighbors}
            ample[CLOUD] = size
            remaining = ample
        return pick_source(key, self._view, self._neighbors, remaining, size)

    def decide(self, cache: MecCache, requests: Sequence[Key],
               availability: AvailabilityView | None = None,
               neighbor_ids: Iterable[int] = (),
               budget: TransferBudget | None = None) -> PolicyDecision:
        self.period += 1
        self._view = availability
        self._neighbors = list(neighbor_ids)
        remaining = dict(budget.remaining) if budget is not None else None
        decision = PolicyDecision()
        pending: dict[Key, Insertion] = {}
        gone: set[Key] = set()
        free = cache.free

        for key in requests:
            self.clock += 1
            resident = key in pending or (key in cache.entries
                                          and key not in gone)
            self.on_request(key, resident)
            if resident:
                continue
            size = self.catalog.size(*key)
            if size > cache.capacity:
                continue
            source = self._pick(key, size, remaining)
            if source is None:
                continue  # no affordable source this period
            victims: list[tuple[tuple, Key, int, Insertion | None]] = []
            if size > free:
                # Insertions scheduled earlier in this same call compete
                # for space too; displacing one cancels its fetch, which
                # keeps batched processing identical to a one-request-at-
                # a-time replay of the trace.
                candidates = [(self.rank(k, e.size), k, e.size, None)
                              for k, e in cache.entries.items()
                              if k not in gone and not e.in_flight]
                candidates += [(self.rank(k, ins.size), k, ins.size, ins)
                               for k, ins in pending.items()]
                candidates.sort(key=lambda row: row[0])
                if not candidates or not self.admits(key, size, candidates):
                    continue
                freed = free
                for row in candidates:
                    if freed >= size:
                        break
                    victims.append(row)
                    freed += row[2]
                if freed < size:
                    continue  # pinned entries keep it from fitting
            for rank_value, k, k_size, canceled in victims:
                free += k_size
                if canceled is None:
                    gone.add(k)
                    decision.evictions.append(k)
                else:
                    del pending[k]
                    decision.insertions.remove(canceled)
                    if remaining is not None:
                        remaining[canceled.source] += k_size
                self.on_evict(k, k_size, rank_value)
            if remaining is not None:
                remaining[source] -= size
            free -= size
            insertion = Insertion(key, size, source)
            pending[key] = insertion
            decision.insertions.append(insertion)
            self.on_insert(key, size)
        return decision


class LruPolicy(ReactivePolicy):
    name = "lru"

    def __init__(self, catalog: VideoCatalog):
        super().__init__(catalog)
        self.last_used: dict[Key, int] = {}

    def register_seed(self, key: Key, size: int) -> None:
        self.last_used.setdefault(key, 0)

    def on_request(self, key: Key, resident: bool) -> None:
        self.last_used[key] = self.clock

    def rank(self, key: Key, size: int) -> tuple:
        return (self.last_used.get(key, 0), key)


class LfuPolicy(ReactivePolicy):
    name = "lfu"

    def __init__(self, catalog: VideoCatalog):
        super().__init__(catalog)
        self.counts: dict[Key, int] = {}
        self.inserted_at: dict[Key, int] = {}

    def register_seed(self, key: Key, size: int) -> None:
        self.counts.setdefault(key, 0)
        self.inserted_at.setdefault(key, 0)

    def on_request(self, key: Key, resident: bool) -> None:
        self.counts[key] = self.counts.get(key, 0) + 1

    def on_insert(self, key: Key, size: int) -> None:
        self.inserted_at[key] = self.clock

    def rank(self, key: Key, size: int) -> tuple:
        # Lowest cumulative demand goes first, ties broken by age.
        return (self.counts.get(key, 0), self.inserted_at.get(key, 0), key)


class WgdsfPolicy(ReactivePolicy):
    """Greedy-Dual-Size-Frequency with a decayed frequency term.

    score = aging + w_time * decayed_freq * w_doc / size, where each past
    access loses half its weight every half_life_periods periods.  The
    aging floor is raised to the score of whatever gets evicted, so long
    resident but idle entries eventually lose to fresh small ones.  A
    half life <= 0 disables decay, which reduces to plain GDSF.
    """

    name = "wgdsf"

    def __init__(self, catalog: VideoCatalog, w_time: float = 1.0,
                 w_doc: float = 1.0, half_life_periods: float = 5.0):
        if w_time <= 0 or w_doc <= 0:
            raise ValueError("wgdsf weights must be positive")
        super().__init__(catalog)
        self.w_time = float(w_time)
        self.w_doc = float(w_doc)
        self.half_life = float(half_life_periods)
        self.aging = 0.0
        self.freq: dict[Key, float] = {}
        self.last_seen: dict[Key, int] = {}
        self.score: dict[Key, float] = {}

    def _decayed_freq(self, key: Key) -> float:
        freq = self.freq.get(key, 0.0)
        if freq and self.half_life > 0:
            age = self.period - self.last_seen.get(key, self.period)
            freq *= 2.0 ** (-age / self.half_life)
        return freq

    def _score(self, key: Key, size: int) -> float:
        return self.aging + self.w_time * self.freq[key] * self.w_doc / size

    def register_seed(self, key: Key, size: int) -> None:
        self.freq.setdefault(key, 1.0)
        self.last_seen.setdefault(key, 0)
        self.score[key] = self._score(key, size)

    def on_request(self, key: Key, resident: bool) -> None:
        self.freq[key] = 1.0 + self._decayed_freq(key)
        self.last_seen[key] = self.period
        if resident:
            self.score[key] = self._score(key, self.catalog.size(*key))

    def on_insert(self, key: Key, size: int) -> None:
        self.score[key] = self._score(key, size)

    def on_evict(self, key: Key, size: int, rank_value: tuple) -> None:
        self.aging = max(self.aging, rank_value[0])
        self.score.pop(key, None)

    def rank(self, key: Key, size: int) -> tuple:
        return (self.score[key], key)


class RbccPolicy(ReactivePolicy):
    """Demand-count ranking with a discount for neighbor-replicated items.

    An entry a cooperating neighbor already caches is worth only
    neighbor_discount of its request count, since it stays reachable over
    the inter-MEC links after a local eviction.  When the cache is full a
    miss is admitted only if its value beats the current minimum.
    """

    name = "rbcc"

    def __init__(self, catalog: VideoCatalog, neighbor_discount: float = 0.5):
        if not 0.0 <= neighbor_discount <= 1.0:
            raise ValueError("neighbor_discount must be within [0, 1]")
        super().__init__(catalog)
        self.rho = float(neighbor_discount)
        self.counts: dict[Key, int] = {}
        self.inserted_at: dict[Key, int] = {}

    def value(self, key: Key) -> float:
        count = self.counts.get(key, 0)
        if self._view is not None and any(
                self._view.chi(key, self._neighbors)):
            return count * self.rho
        return float(count)

    def register_seed(self, key: Key, size: int) -> None:
        self.counts.setdefault(key, 0)
        self.inserted_at.setdefault(key, 0)

    def on_request(self, key: Key, resident: bool) -> None:
        self.counts[key] = self.counts.get(key, 0) + 1

    def on_insert(self, key: Key, size: int) -> None:
        self.inserted_at[key] = self.clock

    def rank(self, key: Key, size: int) -> tuple:
        return (self.value(key), self.inserted_at.get(key, 0), key)

    def admits(self, key: Key, size: int, candidates: list) -> bool:
        lowest_value = candidates[0][0][0]
        return self.value(key) > lowest_value


def make_policy(name: str, catalog: VideoCatalog, *, wgdsf_w_time: float = 1.0,
                wgdsf_w_doc: float = 1.0, wgdsf_half_life: float = 5.0,
                rbcc_discount: float = 0.5) -> ReactivePolicy:
    if name == "lru":
        return LruPolicy(catalog)
    if name == "lfu":
        return LfuPolicy(catalog)
    if name == "wgdsf":
        return WgdsfPolicy(catalog, wgdsf_w_time, wgdsf_w_doc,
                           wgdsf_half_life)
    if name == "rbcc":
        return RbccPolicy(catalog, rbcc_discount)
    raise ValueError(f"unknown baseline policy: {name!r}")
