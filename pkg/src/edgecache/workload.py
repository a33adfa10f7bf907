"""Client request workload: Zipf video selection and in-order sessions.

Each client plays videos back to back.  A session picks a video from a
Zipf distribution over popularity rank and a fixed target representation,
then requests segments strictly in order.  A session may stop early inside
the protected prefix, reflecting the observed tendency of viewers to
abandon within the first part of a video; the stop point is drawn once at
session start.  Every client owns its own generator stream, so its session
sequence does not depend on how fast other clients (or the cache policy)
let it progress.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .catalog import DemandHistory, PopularitySet, VideoCatalog


@dataclass(frozen=True)
class Request:
    """One in-order segment request at the session's target level."""

    client: int
    video_id: int
    segment: int  # 1-based
    level: int    # 1-based

    @property
    def key(self) -> tuple[int, int, int]:
        return (self.video_id, self.segment, self.level)


@dataclass(frozen=True)
class WorkloadConfig:
    zipf_theta: float = 0.8
    level_weights: tuple[float, ...] | None = None  # uniform when None
    abandon_prob: float = 0.5  # chance a session stops inside the prefix

    def validate(self, n_levels: int) -> None:
        if self.zipf_theta <= 0:
            raise ValueError("zipf_theta must be positive")
        if self.level_weights is not None:
            if len(self.level_weights) != n_levels:
                raise ValueError("level_weights length must match level count")
            if any(w < 0 for w in self.level_weights) or sum(self.level_weights) <= 0:
                raise ValueError("level_weights must be nonnegative with positive sum")
        if not 0 <= self.abandon_prob <= 1:
            raise ValueError("abandon_prob must be in [0, 1]")


def zipf_cdf(n: int, theta: float) -> np.ndarray:
    """Cumulative Zipf(theta) probabilities over ranks 1..n."""
    weights = 1.0 / np.arange(1, n + 1, dtype=float) ** theta
    return np.cumsum(weights / weights.sum())


class ClientSession:
    """Mutable per-client playback position within the current video."""

    __slots__ = ("video_id", "level", "next_segment", "last_segment")

    def __init__(self, video_id: int, level: int, last_segment: int):
        self.video_id = video_id
        self.level = level
        self.next_segment = 1
        self.last_segment = last_segment

    @property
    def finished(self) -> bool:
        return self.next_segment > self.last_segment


class WorkloadGenerator:
    """Per-run source of client requests, deterministic under its seed."""

    def __init__(self, catalog: VideoCatalog, pop: PopularitySet,
                 config: WorkloadConfig, n_clients: int,
                 seed: np.random.SeedSequence | int = 0):
        config.validate(catalog.n_levels)
        self.catalog = catalog
        self.pop = pop
        self.config = config
        self.n_clients = n_clients
        if not isinstance(seed, np.random.SeedSequence):
            seed = np.random.SeedSequence(seed)
        self._rngs = [np.random.default_rng(s) for s in seed.spawn(max(n_clients, 1))]
        self._cdf = zipf_cdf(catalog.n_videos, config.zipf_theta)
        if config.level_weights is None:
            w = np.ones(catalog.n_levels)
        else:
            w = np.asarray(config.level_weights, dtype=float)
        self._level_cdf = np.cumsum(w / w.sum())
        self._sessions: list[ClientSession | None] = [None] * n_clients

    def _new_session(self, client: int) -> ClientSession:
        rng = self._rngs[client]
        rank = int(np.searchsorted(self._cdf, rng.random(), side="right"))
        video = self.catalog.video(self.pop.order[rank])
        level = int(np.searchsorted(self._level_cdf, rng.random(), side="right")) + 1
        last = video.n_segments
        if rng.random() < self.config.abandon_prob:
            last = int(rng.integers(1, video.prefix_len + 1))
        return ClientSession(video.video_id, level, last)

    def peek(self, client: int) -> Request:
        """The client's next in-order request, starting a session if needed."""
        session = self._sessions[client]
        if session is None or session.finished:
            session = self._new_session(client)
            self._sessions[client] = session
        return Request(client, session.video_id, session.next_segment, session.level)

    def advance(self, client: int) -> None:
        """Mark the client's current head request as delivered."""
        session = self._sessions[client]
        if session is None:
            raise RuntimeError("advance() before peek()")
        session.next_segment += 1

    def session_ended(self, client: int) -> bool:
        """True when the just-delivered segment completed the session."""
        session = self._sessions[client]
        return session is not None and session.finished

    def was_abandoned(self, client: int) -> bool:
        """True when the current session stops before the video's last segment."""
        session = self._sessions[client]
        if session is None:
            return False
        return session.last_segment < self.catalog.video(session.video_id).n_segments


def draw_requests(generator: WorkloadGenerator,
                  clients: list[int]) -> list[Request]:
    """Head-of-queue request for each listed client."""
    return [generator.peek(k) for k in clients]


def synthesize_demand_history(catalog: VideoCatalog, pop: PopularitySet,
                              config: WorkloadConfig, n_clients: int,
                              sessions_per_client: int,
                              seed: np.random.SeedSequence | int) -> DemandHistory:
    """Simulate a training window of whole sessions and count requests.

    Every segment of every training session counts as one request at the
    session's target level, mirroring what a month of logs would record.
    """
    gen = WorkloadGenerator(catalog, pop, config, n_clients, seed)
    history = DemandHistory(counts=[{} for _ in range(n_clients)])
    for k in range(n_clients):
        counts = history.counts[k]
        for _ in range(sessions_per_client):
            session = gen._new_session(k)
            for i in range(1, session.last_segment + 1):
                key = (session.video_id, i, session.level)
                counts[key] = counts.get(key, 0) + 1
    return history
