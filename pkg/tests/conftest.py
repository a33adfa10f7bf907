"""Shared fixtures: a generated catalog, a hand-built constant-size catalog
and helpers for constructing client states with known estimator values."""

from __future__ import annotations

import pytest

from edgecache.catalog import (CatalogConfig, PopularitySet, Video,
                               VideoCatalog, build_catalog, popularity_set)
from edgecache.clients import ClientState


@pytest.fixture(scope="session")
def small_catalog() -> VideoCatalog:
    config = CatalogConfig(n_videos=12, segments_min=8, segments_max=16,
                           rates_bps=(200_000.0, 400_000.0, 800_000.0),
                           seed=7)
    return build_catalog(config)


@pytest.fixture(scope="session")
def small_pop(small_catalog) -> PopularitySet:
    return popularity_set(small_catalog, 0.25)


@pytest.fixture()
def grid_catalog() -> VideoCatalog:
    """Four 10-segment videos with constant sizes 100/200/400 per level."""
    videos = tuple(
        Video(video_id=f, n_segments=10, sizes=((100, 200, 400),) * 10, rank=f)
        for f in range(4))
    return VideoCatalog(videos=videos,
                        rates_bps=(400_000.0, 800_000.0, 1_600_000.0),
                        segment_duration_s=2.0, fps=30.0)


@pytest.fixture()
def grid_pop(grid_catalog) -> PopularitySet:
    return PopularitySet(order=(0, 1, 2, 3), popular_count=2)


def make_client(client_id: int = 0, region: int = 0, enodeb: int = 0,
                cp_bps: float = 0.0, buffer_s: float = 0.0,
                fps: float = 30.0) -> ClientState:
    """Client with a preset capacity estimate and buffer level."""
    client = ClientState(client_id, region, enodeb, fps=fps)
    if cp_bps > 0:
        client.estimator.update(cp_bps)
    client.buffer_frames = buffer_s * fps
    return client


# One MEC, two eNodeBs, four clients, everything over-provisioned: the
# cloud budget and cache dwarf the catalog, so placement decisions are
# easy to predict and runs finish in well under a second.  Shadowing is
# off to keep radio rates reproducible across periods.
TINY_SCENARIO_TEXT = """
[topology]
mec_positions = 0,0
enodeb_positions = -50,0; 50,0
n_clients = 4
area = -100,-100,100,100
bandwidth_hz = 20e6
tx_power_dbm = 40
noise_dbm = -94
pathloss_anchor_db = 20
pathloss_exponent = 3.5
shadow_sigma_db = 0

[catalog]
n_videos = 6
segments_min = 4
segments_max = 6
rates_bps = 300e3, 600e3
segment_duration_s = 2.0
fps = 30.0
size_jitter = 0.1
popular_fraction = 0.2
zipf_theta = 0.9
seed = 99

[workload]
zipf_theta = 0.9
abandon_prob = 0.4
history_sessions = 10

[cache]
total_size = 20e6

[coop]
cloud_rate_bps = 100e6
intermec_rate_bps = 100e6

[periods]
td_s = 5
gammas_per_j = 2
n_j = 3
slice_s = 0.5

[policy]
max_buffer_s = 12.0

[seeds]
seeds = 7
"""
