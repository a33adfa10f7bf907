"""Partitioned MEC cache and its update primitives.

Each MEC cache is split into three areas: protected prefixes of popular
videos (delta-1, refreshed on the long period), the remaining segments of
popular videos (delta-2) and segments of non-popular videos (delta-3), the
latter two evicted jointly by smoothed delete priority on the short
period.  The delta-1 budget and the joint delta-2/3 budget always sum to
the cache capacity; bytes move between them when the popular set changes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .catalog import PopularitySet, VideoCatalog
from .clients import ClientState, match_indicator

DELTA1, DELTA2, DELTA3 = 1, 2, 3

Key = tuple[int, int, int]  # (video_id, segment, level), 1-based segment/level


class CacheBudgetError(RuntimeError):
    """An insert would violate a partition budget or duplicate a key."""


class Delta1OverflowError(RuntimeError):
    """The popular-prefix working set cannot fit in the cache at all."""


class InsufficientSpaceError(RuntimeError):
    """Not enough evictable bytes in delta-2/3 to satisfy a request."""


class EmptyRegionError(ValueError):
    """Delete priority is undefined for a region with no clients."""


@dataclass
class CacheEntry:
    key: Key
    size: int
    partition: int
    dp_hat: float | None = None  # smoothed delete priority; None until scored
    in_flight: bool = False


def partition_for(key: Key, pop: PopularitySet, catalog: VideoCatalog) -> int:
    """Partition a key belongs to under the given popularity set."""
    video_id, segment, _level = key
    if pop.is_popular(video_id):
        if segment <= catalog.video(video_id).prefix_len:
            return DELTA1
        return DELTA2
    return DELTA3


def _eviction_order(entry: CacheEntry) -> tuple:
    # Unscored entries evict first; then higher smoothed priority, larger
    # size, and finally key order, so the order is always total.
    dp = entry.dp_hat if entry.dp_hat is not None else math.inf
    return (-dp, -entry.size, entry.key)


class MecCache:
    """One MEC server's cache state.

    ``sh`` is the delta-1 byte budget and ``sc`` the joint delta-2/3
    budget; they always sum to ``capacity``.  When ``partitioned`` is
    False (baseline policies) the whole capacity is one pool and entries
    carry the delta-3 tag only for bookkeeping.
    """

    def __init__(self, mec_id: int, capacity: int, partitioned: bool = True):
        if capacity < 0:
            raise ValueError("capacity must be >= 0")
        self.mec_id = mec_id
        self.capacity = capacity
        self.partitioned = partitioned
        self.sh = 0
        self.sc = capacity
        self.entries: dict[Key, CacheEntry] = {}
        self._used = {DELTA1: 0, DELTA2: 0, DELTA3: 0}

    # -- bookkeeping -----------------------------------------------------

    def __contains__(self, key: Key) -> bool:
        return key in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def used(self, partition: int | None = None) -> int:
        if partition is None:
            return sum(self._used.values())
        return self._used[partition]

    @property
    def used_delta23(self) -> int:
        return self._used[DELTA2] + self._used[DELTA3]

    @property
    def free(self) -> int:
        return self.capacity - self.used()

    def evictable_bytes(self) -> int:
        """Delta-2/3 bytes not currently being transmitted."""
        return sum(e.size for e in self.entries.values()
                   if e.partition != DELTA1 and not e.in_flight)

    def add(self, entry: CacheEntry) -> None:
        if entry.key in self.entries:
            raise CacheBudgetError(f"key {entry.key} already cached")
        if entry.partition == DELTA1:
            if self._used[DELTA1] + entry.size > self.sh:
                raise CacheBudgetError("delta-1 budget exceeded")
        elif self.used_delta23 + entry.size > self.sc:
            raise CacheBudgetError("delta-2/3 budget exceeded")
        self.entries[entry.key] = entry
        self._used[entry.partition] += entry.size

    def remove(self, key: Key) -> CacheEntry:
        entry = self.entries.pop(key)
        self._used[entry.partition] -= entry.size
        return entry

    def set_in_flight(self, key: Key, value: bool) -> None:
        if key in self.entries:
            self.entries[key].in_flight = value

    def check_invariants(self) -> None:
        """Raise if any budget or accounting invariant is violated."""
        used = {DELTA1: 0, DELTA2: 0, DELTA3: 0}
        for key, e in self.entries.items():
            assert e.key == key
            used[e.partition] += e.size
        if used != self._used:
            raise AssertionError("partition byte accounting is stale")
        if self.used() > self.capacity:
            raise AssertionError("cache over capacity")
        if self._used[DELTA1] > self.sh:
            raise AssertionError("delta-1 over budget")
        if self.used_delta23 > self.sc:
            raise AssertionError("delta-2/3 over budget")
        if self.sh + self.sc != self.capacity:
            raise AssertionError("partition budgets do not sum to capacity")

    # -- update primitives ------------------------------------------------


def delete_priority(key: Key, rate_bps: float, clients: list[ClientState],
                    zeta: float, alpha: float) -> float:
    """Per-period delete priority of one cached representation.

    Averages, over every client of the region, the reciprocal of that
    client's request count for the key plus a capacity-match bonus: clients
    whose measured capacity sustains the representation rate push the
    priority down (the entry is worth keeping), as do requests.
    """
    if not clients:
        raise EmptyRegionError("delete priority needs at least one client")
    if zeta <= 0 or alpha <= 0:
        raise ValueError("zeta and alpha must be positive")
    total = 0.0
    for client in clients:
        g = client.period_counts.get(key, 0)
        v = match_indicator(client.cp_hat, rate_bps)
        total += 1.0 / (g + zeta * v + alpha)
    return total / len(clients)


def smooth_delete_priority(previous: float | None, current: float,
                           lam: float) -> float:
    """Blend the current delete priority with the previous period's value."""
    if not 0 <= lam <= 1:
        raise ValueError("lambda must be in [0, 1]")
    if previous is None:
        return current
    return lam * current + (1.0 - lam) * previous


def update_delete_priorities(cache: MecCache, clients: list[ClientState],
                             catalog: VideoCatalog, zeta: float, alpha: float,
                             lam: float) -> None:
    """Score every cached entry at the end of a short period.

    Equivalent to calling :func:`delete_priority` per entry, but grouped:
    clients with no requests for a key contribute one of only two values
    per level, so the per-entry work is proportional to the number of
    actual requesters.
    """
    if not clients:
        raise EmptyRegionError("delete priority needs at least one client")
    n = len(clients)
    n_match = [0] * (catalog.n_levels + 1)
    for level in range(1, catalog.n_levels + 1):
        rate = catalog.rate(level)
        n_match[level] = sum(1 for c in clients if c.cp_hat >= rate)
    base = [0.0] * (catalog.n_levels + 1)
    for level in range(1, catalog.n_levels + 1):
        m = n_match[level]
        base[level] = m / (zeta + alpha) + (n - m) / alpha
    requesters: dict[Key, list[tuple[ClientState, int]]] = {}
    for client in clients:
        for key, g in client.period_counts.items():
            requesters.setdefault(key, []).append((client, g))
    for key, entry in cache.entries.items():
        level = key[2]
        rate = catalog.rate(level)
        total = base[level]
        for client, g in requesters.get(key, ()):
            v = match_indicator(client.cp_hat, rate)
            total += 1.0 / (g + zeta * v + alpha) - 1.0 / (zeta * v + alpha)
        entry.dp_hat = smooth_delete_priority(entry.dp_hat, total / n, lam)


def evict_for_space(cache: MecCache, need: int) -> list[Key]:
    """Evict delta-2/3 entries in descending smoothed delete priority.

    Ties break toward larger entries, then key order.  Protected (delta-1)
    and in-flight entries are never touched.  Raises when the evictable
    bytes cannot cover ``need``; in that case nothing is evicted.
    """
    if need < 0:
        raise ValueError("need must be >= 0")
    if need == 0:
        return []
    if cache.evictable_bytes() < need:
        raise InsufficientSpaceError(
            f"need {need} bytes but only {cache.evictable_bytes()} evictable")
    candidates = sorted((e for e in cache.entries.values()
                         if e.partition != DELTA1 and not e.in_flight),
                        key=_eviction_order)
    evicted: list[Key] = []
    freed = 0
    for entry in candidates:
        if freed >= need:
            break
        cache.remove(entry.key)
        evicted.append(entry.key)
        freed += entry.size
    return evicted


def most_requested_level(region_counts: dict[Key, int], video_id: int,
                         segment: int, n_levels: int) -> int:
    """Historically most requested level of a segment; ties pick the
    cheapest level so more segments fit during the initial fill."""
    best_level, best_count = 1, -1
    for level in range(1, n_levels + 1):
        count = region_counts.get((video_id, segment, level), 0)
        if count > best_count:
            best_level, best_count = level, count
    return best_level


def initial_fill(cache: MecCache, catalog: VideoCatalog, pop: PopularitySet,
                 region_counts: dict[Key, int]) -> None:
    """Populate an empty cache before the first period.

    Popular-video prefixes go first, one representation per segment (the
    historically most requested one), walking videos in descending
    popularity until a segment no longer fits.  The delta-1 budget is
    frozen at that point and the rest of the cache fills with the
    remaining candidates in descending historical demand, skipping
    whatever does not fit.
    """
    if cache.entries:
        raise ValueError("initial_fill requires an empty cache")
    prefix_entries: list[CacheEntry] = []
    placed = 0
    filling = True
    for video_id in pop.popular_videos():
        if not filling:
            break
        video = catalog.video(video_id)
        for segment in range(1, video.prefix_len + 1):
            level = most_requested_level(region_counts, video_id, segment,
                                         catalog.n_levels)
            size = video.size(segment, level)
            if placed + size > cache.capacity:
                filling = False
                break
            prefix_entries.append(
                CacheEntry((video_id, segment, level), size, DELTA1))
            placed += size
    cache.sh = placed
    cache.sc = cache.capacity - placed
    for entry in prefix_entries:
        cache.add(entry)

    popular = frozenset(pop.popular_videos())
    candidates: list[tuple[int, Key, int]] = []
    for video in catalog.videos:
        is_pop = video.video_id in popular
        first = video.prefix_len + 1 if is_pop else 1
        for segment in range(first, video.n_segments + 1):
            for level in range(1, catalog.n_levels + 1):
                key = (video.video_id, segment, level)
                candidates.append((region_counts.get(key, 0), key,
                                   video.size(segment, level)))
    candidates.sort(key=lambda item: (-item[0], item[1]))
    for _count, key, size in candidates:
        if cache.used_delta23 + size > cache.sc:
            continue
        tag = DELTA2 if key[0] in popular else DELTA3
        cache.add(CacheEntry(key, size, tag))


def delta1_target(pop: PopularitySet, catalog: VideoCatalog) -> dict[Key, int]:
    """All representations of every popular video's prefix, with sizes."""
    target: dict[Key, int] = {}
    for video_id in pop.popular_videos():
        video = catalog.video(video_id)
        for segment in range(1, video.prefix_len + 1):
            for level in range(1, catalog.n_levels + 1):
                target[(video_id, segment, level)] = video.size(segment, level)
    return target


def refresh_delta1(cache: MecCache, pop: PopularitySet,
                   catalog: VideoCatalog) -> tuple[int, list[Key], list[Key]]:
    """Re-anchor the protected partition at a long-period boundary.

    The new delta-1 working set is every representation of every popular
    prefix segment.  Returns ``(fc, missing, evicted)`` where ``fc`` is the
    byte delta between the new and old delta-1 budgets (positive values
    shrink the delta-2/3 budget per the space-transfer rule, negative ones
    grow it), ``missing`` lists target keys not yet cached, ordered most
    popular video first, and ``evicted`` lists entries removed to honor the
    shrunken delta-2/3 budget.
    """
    target = delta1_target(pop, catalog)
    target_bytes = sum(target.values())
    if target_bytes > cache.capacity:
        raise Delta1OverflowError(
            f"popular prefixes need {target_bytes} bytes, capacity is "
            f"{cache.capacity}")
    fc = target_bytes - cache.sh
    cache.sh = target_bytes
    cache.sc = cache.capacity - target_bytes

    for entry in cache.entries.values():
        tag = partition_for(entry.key, pop, catalog)
        if tag != entry.partition:
            cache._used[entry.partition] -= entry.size
            cache._used[tag] += entry.size
            entry.partition = tag

    evicted: list[Key] = []
    if cache.used_delta23 > cache.sc:
        overshoot = cache.used_delta23 - cache.sc
        try:
            evicted = evict_for_space(cache, overshoot)
        except InsufficientSpaceError:
            # In-flight entries may pin bytes past the budget; evict what we
            # can and let pending fetches wait for space.
            candidates = sorted((e for e in cache.entries.values()
                                 if e.partition != DELTA1 and not e.in_flight),
                                key=_eviction_order)
            for entry in candidates:
                if cache.used_delta23 <= cache.sc:
                    break
                cache.remove(entry.key)
                evicted.append(entry.key)

    rank = {video_id: i for i, video_id in enumerate(pop.order)}
    missing = sorted((key for key in target if key not in cache.entries),
                     key=lambda key: (rank[key[0]], key[1], key[2]))
    return fc, missing, evicted
