"""Cross-MEC cooperation: utilities, availability and transfer budgets.

A MEC only spends cache space and backhaul on segments its own clients
ask for, but the worth of caching a segment locally drops when a
neighbor already holds it, since a neighbor fetch is cheap.  This module
scores placement candidates accordingly and rations the per-period byte
budgets of the inter-MEC and origin links.  Cache-update transfers are
the only traffic charged against these budgets; client deliveries ride
the links separately.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .cache import Key, MecCache
from .catalog import VideoCatalog
from .clients import ClientState, cache_priority

CLOUD = -1  # link id of the origin-server path


def client_utility(pr: float, chi: Iterable[int]) -> float:
    """Utility of caching a segment locally for one requesting client.

    ``chi`` holds one indicator per neighbor MEC, 1 when that neighbor
    caches the segment.  The base priority doubles when no neighbor can
    serve the segment, because a local copy then also saves an origin
    fetch.
    """
    if pr < 0:
        raise ValueError("priority must be >= 0")
    miss_everywhere = 1.0
    for x in chi:
        if x not in (0, 1):
            raise ValueError("availability indicators must be 0 or 1")
        miss_everywhere *= 1 - x
    return pr + pr * miss_everywhere


class AvailabilityView:
    """Read-only lookup of which MECs currently cache which keys."""

    def __init__(self, caches: Mapping[int, MecCache]):
        self._caches = caches

    def has(self, mec_id: int, key: Key) -> bool:
        return key in self._caches[mec_id]

    def chi(self, key: Key, neighbor_ids: Iterable[int]) -> list[int]:
        return [1 if key in self._caches[p] else 0 for p in neighbor_ids]

    def caching_neighbors(self, key: Key, neighbor_ids: Iterable[int]) -> list[int]:
        return [p for p in neighbor_ids if key in self._caches[p]]


@dataclass
class CandidateItem:
    """One placement candidate for a MEC's short-period decision."""

    key: Key
    size: int
    ps: float          # summed utility over requesting clients
    source: int        # neighbor MEC id, or CLOUD


class TransferBudget:
    """Remaining per-period byte budgets of one MEC's fetch links.

    Capacities are bits/second; the byte budget of a period is
    capacity * TD / 8, floored to whole bytes.
    """

    def __init__(self, link_bps: Mapping[int, float], period_s: float):
        if period_s <= 0:
            raise ValueError("period must be positive")
        self.remaining: dict[int, int] = {
            link: int(bps * period_s / 8.0) for link, bps in link_bps.items()
        }
        for link, cap in self.remaining.items():
            if cap < 0:
                raise ValueError(f"negative capacity on link {link}")

    def can_take(self, link: int, size: int) -> bool:
        return self.remaining[link] >= size

    def take(self, link: int, size: int) -> None:
        if not self.can_take(link, size):
            raise ValueError(f"link {link} budget exhausted")
        self.remaining[link] -= size


def pick_source(key: Key, availability: AvailabilityView,
                neighbor_ids: Iterable[int], remaining: Mapping[int, int],
                size: int) -> int | None:
    """Fetch source for ``key``: a neighbor MEC id, CLOUD, or None (defer).

    A neighbor that caches the segment is the only acceptable MEC source;
    among those with budget left for the bytes, the one with the most
    remaining budget wins (ties go to the lower id).  When some neighbor
    stores the segment but none can afford the transfer, the fetch is
    deferred rather than rerouted to the origin.  The origin serves only
    segments no neighbor stores, and also only within budget.
    """
    holders = availability.caching_neighbors(key, neighbor_ids)
    if holders:
        affordable = [p for p in holders if remaining[p] >= size]
        if not affordable:
            return None
        return max(affordable, key=lambda p: (remaining[p], -p))
    if remaining[CLOUD] >= size:
        return CLOUD
    return None


def pick_neighbor_source(key: Key, availability: AvailabilityView,
                         budget: TransferBudget, neighbor_ids: Iterable[int],
                         size: int) -> int | None:
    """Budget-object wrapper around :func:`pick_source`."""
    return pick_source(key, availability, neighbor_ids, budget.remaining, size)


def aggregate_utilities(requests: list[tuple[ClientState, Key]],
                        cache: MecCache, availability: AvailabilityView,
                        neighbor_ids: list[int], catalog: VideoCatalog,
                        omega: float, budget: TransferBudget
                        ) -> tuple[list[CandidateItem], list[Key]]:
    """Build one MEC's candidate list from its head-of-queue requests.

    Requests already served by the local cache are dropped; the rest are
    scored per client and summed per key.  Each candidate is assigned its
    fetch source up front (against a scratch copy of the budgets, so the
    assignment spreads load without consuming anything) and becomes one
    solver item; keys whose fetch would have to be deferred are returned
    separately and simply retried as fresh candidates next period.
    """
    ps: dict[Key, float] = {}
    for client, key in requests:
        if key in cache:
            continue
        size = catalog.size(*key)
        pr = cache_priority(client.buffer_time_s, size, client.cp_hat, omega)
        chi = availability.chi(key, neighbor_ids)
        ps[key] = ps.get(key, 0.0) + client_utility(pr, chi)
    scratch = dict(budget.remaining)
    items: list[CandidateItem] = []
    deferred: list[Key] = []
    for key in sorted(ps):
        size = catalog.size(*key)
        source = pick_source(key, availability, neighbor_ids, scratch, size)
        if source is None:
            deferred.append(key)
            continue
        scratch[source] -= size
        items.append(CandidateItem(key, size, ps[key], source))
    return items, deferred
