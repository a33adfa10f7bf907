"""Video library, popularity model, and per-MEC cache size allocation.

The catalog is synthetic: segment sizes are derived from the representation
rate ladder and a per-segment jitter factor, so no media files are needed.
All structures here are immutable after construction and can be shared
read-only between simulation runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class CatalogConfigError(ValueError):
    """Raised when a catalog specification is internally inconsistent."""


class AllocationError(ValueError):
    """Raised when cache-size allocation is undefined (zero total demand)."""


def prefix_length(n_segments: int) -> int:
    """Protected prefix length of a video: ceil(0.15 * n_segments).

    Computed in integer arithmetic (ceil(3n/20)) so the result is exact for
    every segment count.
    """
    if n_segments < 1:
        raise ValueError("n_segments must be >= 1")
    return (3 * n_segments + 19) // 20


@dataclass(frozen=True)
class Video:
    """One video: per-segment, per-level sizes plus its popularity rank.

    ``sizes[i][l]`` is the size in bytes of segment ``i`` (0-based) at
    representation level ``l`` (0-based; level 1..L maps to index 0..L-1).
    Rank 0 is the most popular video.
    """

    video_id: int
    n_segments: int
    sizes: tuple[tuple[int, ...], ...]
    rank: int

    @property
    def prefix_len(self) -> int:
        return prefix_length(self.n_segments)

    def size(self, segment: int, level: int) -> int:
        """Size in bytes of 1-based ``segment`` at 1-based ``level``."""
        return self.sizes[segment - 1][level - 1]


@dataclass(frozen=True)
class VideoCatalog:
    """The full video library plus the shared representation rate ladder."""

    videos: tuple[Video, ...]
    rates_bps: tuple[float, ...]
    segment_duration_s: float
    fps: float

    @property
    def n_videos(self) -> int:
        return len(self.videos)

    @property
    def n_levels(self) -> int:
        return len(self.rates_bps)

    @property
    def frames_per_segment(self) -> int:
        return int(round(self.segment_duration_s * self.fps))

    def video(self, video_id: int) -> Video:
        return self.videos[video_id]

    def size(self, video_id: int, segment: int, level: int) -> int:
        return self.videos[video_id].size(segment, level)

    def rate(self, level: int) -> float:
        """Encoding rate in bits/s of 1-based ``level``."""
        return self.rates_bps[level - 1]

    def total_bytes(self) -> int:
        return sum(s for v in self.videos for row in v.sizes for s in row)

    def by_rank(self) -> list[Video]:
        """Videos ordered most popular first."""
        return sorted(self.videos, key=lambda v: v.rank)


@dataclass(frozen=True)
class PopularitySet:
    """Total popularity order over video ids plus the popular prefix size.

    ``order[0]`` is the most popular video id.  The popular subset used for
    the protected cache partition is always a prefix of ``order``.
    """

    order: tuple[int, ...]
    popular_count: int

    def popular_videos(self) -> tuple[int, ...]:
        return self.order[: self.popular_count]

    def is_popular(self, video_id: int) -> bool:
        return video_id in frozenset(self.popular_videos())


@dataclass
class DemandHistory:
    """Per-client request counts from a training window.

    ``counts[k]`` maps ``(video_id, segment, level)`` (1-based segment and
    level) to the number of requests client ``k`` issued for it.
    """

    counts: list[dict[tuple[int, int, int], int]] = field(default_factory=list)

    def requested_segments(self, client: int, video_id: int) -> set[int]:
        return {i for (f, i, _l), c in self.counts[client].items()
                if f == video_id and c > 0}

    def region_counts(self, clients: list[int]) -> dict[tuple[int, int, int], int]:
        """Aggregate counts over one region's clients."""
        agg: dict[tuple[int, int, int], int] = {}
        for k in clients:
            for key, c in self.counts[k].items():
                agg[key] = agg.get(key, 0) + c
        return agg

    def weighted_bytes(self, clients: list[int], catalog: VideoCatalog) -> int:
        """Total demand in bytes (count x size) over one region's clients."""
        total = 0
        for k in clients:
            for (f, i, l), c in self.counts[k].items():
                total += c * catalog.size(f, i, l)
        return total


@dataclass(frozen=True)
class CatalogConfig:
    n_videos: int
    segments_min: int
    segments_max: int
    rates_bps: tuple[float, ...]
    segment_duration_s: float = 2.0
    fps: float = 30.0
    size_jitter: float = 0.1
    popular_fraction: float = 0.2
    zipf_theta: float = 0.8
    seed: int = 0

    def validate(self) -> None:
        if self.n_videos < 1:
            raise CatalogConfigError("n_videos must be >= 1")
        if len(self.rates_bps) < 1:
            raise CatalogConfigError("at least one representation level required")
        if any(r <= 0 for r in self.rates_bps):
            raise CatalogConfigError("representation rates must be positive")
        if any(b <= a for a, b in zip(self.rates_bps, self.rates_bps[1:])):
            raise CatalogConfigError("representation rates must strictly increase")
        if not 1 <= self.segments_min <= self.segments_max:
            raise CatalogConfigError("invalid segment count range")
        if self.zipf_theta <= 0:
            raise CatalogConfigError("zipf_theta must be positive")
        if not 0 <= self.size_jitter < 1:
            raise CatalogConfigError("size_jitter must be in [0, 1)")


def build_catalog(config: CatalogConfig) -> VideoCatalog:
    """Build a deterministic catalog from ``config``.

    Segment sizes are rate x duration scaled by a per-segment jitter factor
    drawn uniformly from [-jitter, +jitter]; the same factor applies to all
    levels of one segment, so sizes stay strictly increasing with level.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    ranks = [int(r) for r in rng.permutation(config.n_videos)]
    videos = []
    for f in range(config.n_videos):
        n_seg = int(rng.integers(config.segments_min, config.segments_max + 1))
        jitter = rng.uniform(-config.size_jitter, config.size_jitter, size=n_seg)
        sizes = []
        for i in range(n_seg):
            row = []
            prev = 0
            for rate in config.rates_bps:
                s = round(rate * config.segment_duration_s / 8.0 * (1.0 + jitter[i]))
                s = max(int(s), prev + 1)  # keep sizes strictly increasing
                row.append(s)
                prev = s
            sizes.append(tuple(row))
        videos.append(Video(video_id=f, n_segments=n_seg,
                            sizes=tuple(sizes), rank=ranks[f]))
    return VideoCatalog(videos=tuple(videos),
                        rates_bps=tuple(float(r) for r in config.rates_bps),
                        segment_duration_s=config.segment_duration_s,
                        fps=config.fps)


def popularity_set(catalog: VideoCatalog, popular_fraction: float) -> PopularitySet:
    """Popularity order by rank with a popular prefix of the given fraction."""
    order = tuple(v.video_id for v in catalog.by_rank())
    count = min(len(order), max(1, int(round(popular_fraction * len(order)))))
    return PopularitySet(order=order, popular_count=count)


def allocate_cache_sizes(history: DemandHistory, total_size: int,
                         regions: dict[int, list[int]],
                         catalog: VideoCatalog) -> dict[int, int]:
    """Split the total cache budget across MEC servers by historical demand.

    Each region's share is proportional to its demand in bytes (request
    count times segment size, summed over its clients).  Shares are floored
    to whole bytes and the remainder is handed out one byte at a time in
    descending fractional-part order (ties by MEC id), so the shares always
    sum to ``total_size`` exactly.
    """
    if total_size < 0:
        raise ValueError("total_size must be >= 0")
    weights = {q: history.weighted_bytes(clients, catalog)
               for q, clients in regions.items()}
    total_weight = sum(weights.values())
    if total_weight == 0:
        raise AllocationError("total historical demand is zero")
    shares = {q: (total_size * w) // total_weight for q, w in weights.items()}
    remainder = total_size - sum(shares.values())
    # Fractional part of q's share is (total_size * w_q) mod W; exact in ints.
    order = sorted(regions,
                   key=lambda q: (-((total_size * weights[q]) % total_weight), q))
    for q in order[:remainder]:
        shares[q] += 1
    return shares
