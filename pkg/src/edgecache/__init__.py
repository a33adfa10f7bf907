"""Deterministic simulator of cooperative multi-MEC video segment caching.

The package models a cloud / MEC / eNodeB / client hierarchy in which each
MEC server maintains a partitioned segment cache that is refreshed on two
time scales, shares segments with neighboring MEC servers under per-link
transfer budgets, and decides per-period placements by solving a 0-1
program with branch-and-bound.  Classic replacement policies (LRU, LFU,
WGDSF, RBCC) run behind the same policy interface for comparison.
"""

__version__ = "0.1.0"
