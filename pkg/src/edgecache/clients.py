"""Per-client playback and transmission state.

Holds the playback buffer (in frames), the smoothed estimate of each
client's transmission capacity, and the per-period request counters that
feed the delete-priority formula.  Also implements the two client-side
formulas used by the cache update strategy: the capacity/rate match
indicator and the buffer-driven cache priority.
"""

from __future__ import annotations

import math

from .workload import Request


def match_indicator(cp_bps: float, rate_bps: float) -> int:
    """1 when the measured capacity can sustain the representation rate.

    The comparison is inclusive: a capacity exactly equal to the rate
    counts as a match.
    """
    if cp_bps < 0 or rate_bps < 0:
        raise ValueError("capacity and rate must be nonnegative")
    return 1 if cp_bps >= rate_bps else 0


def cache_priority(buffer_time_s: float, size_bytes: int,
                   cp_bps: float, omega: float) -> float:
    """Urgency of a pending segment request, from the playback buffer.

    A client whose remaining buffer time covers the expected transmission
    time of the requested segment is non-urgent and scores 0.  Otherwise
    the priority decays exponentially with buffer time:
    exp(omega / (1 + buffer_time)) - 1.  A zero capacity estimate means the
    transmission time is unbounded, so any nonempty segment is urgent.
    """
    if omega <= 0:
        raise ValueError("omega must be positive")
    if cp_bps > 0:
        tx_time = 8.0 * size_bytes / cp_bps
        if buffer_time_s >= tx_time:
            return 0.0
    elif size_bytes == 0:
        return 0.0
    return math.exp(omega / (1.0 + buffer_time_s)) - 1.0


class CapacityEstimator:
    """EWMA over observed per-segment throughput, in bits/s.

    The first observation initializes the estimate directly; afterwards the
    estimate is a convex combination of past observations and hence stays
    within their range.
    """

    __slots__ = ("weight", "value", "_seen")

    def __init__(self, weight: float = 0.3):
        if not 0 < weight <= 1:
            raise ValueError("weight must be in (0, 1]")
        self.weight = weight
        self.value = 0.0
        self._seen = False

    def update(self, observed_bps: float) -> float:
        if observed_bps < 0:
            raise ValueError("observed throughput must be nonnegative")
        if not self._seen:
            self.value = observed_bps
            self._seen = True
        else:
            self.value = (1.0 - self.weight) * self.value + self.weight * observed_bps
        return self.value


class ClientState:
    """One client's playback and accounting state within a run."""

    __slots__ = ("client_id", "region", "enodeb", "fps", "buffer_frames",
                 "estimator", "period_counts", "stall_s", "delivered_bits",
                 "radio_bps", "download")

    def __init__(self, client_id: int, region: int, enodeb: int,
                 fps: float = 30.0, ewma_weight: float = 0.3,
                 initial_buffer_frames: float = 0.0):
        self.client_id = client_id
        self.region = region
        self.enodeb = enodeb
        self.fps = fps
        self.buffer_frames = float(initial_buffer_frames)
        self.estimator = CapacityEstimator(ewma_weight)
        self.period_counts: dict[tuple[int, int, int], int] = {}
        self.stall_s = 0.0
        self.delivered_bits = 0
        self.radio_bps = 0.0
        # In-progress download, managed by the simulation loop:
        # (request, remaining_bytes, source) or None, where source is a
        # neighbor MEC id, coop.CLOUD, or None for a local cache hit.
        self.download: tuple[Request, float, int | None] | None = None

    @property
    def cp_hat(self) -> float:
        return self.estimator.value

    @property
    def buffer_time_s(self) -> float:
        return self.buffer_frames / self.fps

    def record_request(self, key: tuple[int, int, int]) -> None:
        self.period_counts[key] = self.period_counts.get(key, 0) + 1

    def reset_period_counts(self) -> None:
        self.period_counts = {}

    def record_delivery(self, size_bytes: int, duration_s: float,
                        frames: int) -> None:
        """Account one completed segment: update the capacity estimate and
        credit the buffer with the segment's frames."""
        if duration_s <= 0:
            raise ValueError("duration must be positive")
        self.estimator.update(8.0 * size_bytes / duration_s)
        self.buffer_frames += frames
        self.delivered_bits += 8 * size_bytes

    def drop_buffer(self) -> None:
        """Discard buffered frames (viewer walked away mid-video)."""
        self.buffer_frames = 0.0

    def advance_playback(self, dt_s: float) -> float:
        """Play for ``dt_s`` seconds; returns stall time accrued.

        Consumes up to ``dt_s * fps`` frames; once the buffer empties the
        remainder of the interval counts as stalled time.
        """
        if dt_s < 0:
            raise ValueError("dt must be nonnegative")
        playable = self.buffer_frames / self.fps
        if playable >= dt_s:
            self.buffer_frames -= dt_s * self.fps
            return 0.0
        stall = dt_s - playable
        self.buffer_frames = 0.0
        self.stall_s += stall
        return stall
