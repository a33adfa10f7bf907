"""Exact solver for the per-period 0-1 placement program.

Each short period every MEC picks a subset of its placement candidates
to maximize summed utility, subject to the free delta-2/3 space and to
per-link byte budgets (one per neighbor MEC plus the origin path).  The
solver is a best-first branch and bound over an LP relaxation computed
by a small dense simplex; a half-enumeration brute force over the same
problem serves as the test oracle for instances of up to 22 items.

Objectives are reported as plain running sums in ascending item order so
two equal selections always produce bit-identical floats.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .coop import CLOUD, CandidateItem, Key

_PRUNE_TOL = 1e-9    # bound improvements below this are not worth chasing
_SNAP_TOL = 1e-7     # LP values this close to an integer count as integral


class SolverError(RuntimeError):
    """The solver could not finish (iteration or node limit)."""


@dataclass(frozen=True)
class PlacementProblem:
    """A 0-1 placement instance in matrix-free form.

    ``link_bytes[j]`` holds the bytes item ``j`` would pull over each
    fetch link (neighbors first, origin last); for real candidates it is
    one-hot times the item size, but the solver accepts any non-negative
    integers.
    """

    ps: tuple[float, ...]
    sizes: tuple[int, ...]
    link_bytes: tuple[tuple[int, ...], ...]
    space_budget: int
    link_budgets: tuple[int, ...]

    def __post_init__(self):
        n = len(self.ps)
        if not (len(self.sizes) == len(self.link_bytes) == n):
            raise ValueError("item arrays must have equal length")
        if self.space_budget < 0 or any(b < 0 for b in self.link_budgets):
            raise ValueError("budgets must be >= 0")
        width = len(self.link_budgets)
        for j in range(n):
            if len(self.link_bytes[j]) != width:
                raise ValueError("link byte vectors must match budget count")
            if self.sizes[j] < 0 or any(a < 0 for a in self.link_bytes[j]):
                raise ValueError("sizes and link bytes must be >= 0")
            if self.ps[j] < 0:
                raise ValueError("utilities must be >= 0")

    @property
    def n_items(self) -> int:
        return len(self.ps)


@dataclass(frozen=True)
class PlacementSolution:
    selected: tuple[int, ...]
    objective: float
    nodes: int
    bytes_used: tuple[int, ...]  # space first, then one entry per link


def problem_from_candidates(candidates: list[CandidateItem],
                            neighbor_ids: list[int], space_budget: int,
                            link_budgets: dict[int, int]
                            ) -> tuple[PlacementProblem, list[Key]]:
    """Assemble a solver instance from scored candidates.

    Link columns follow ``neighbor_ids`` order with the origin path last;
    each candidate loads only the column of its chosen source.
    """
    links = list(neighbor_ids) + [CLOUD]
    link_bytes = []
    for item in candidates:
        row = [0] * len(links)
        row[links.index(item.source)] = item.size
        link_bytes.append(tuple(row))
    problem = PlacementProblem(
        ps=tuple(item.ps for item in candidates),
        sizes=tuple(item.size for item in candidates),
        link_bytes=tuple(link_bytes),
        space_budget=space_budget,
        link_budgets=tuple(link_budgets[link] for link in links),
    )
    return problem, [item.key for item in candidates]


def _matrix(problem: PlacementProblem) -> tuple[np.ndarray, np.ndarray]:
    """Constraint rows (space row first, then links) and right-hand sides."""
    n = problem.n_items
    width = len(problem.link_budgets)
    rows = np.zeros((1 + width, n), dtype=np.int64)
    rows[0] = problem.sizes
    for j in range(n):
        rows[1:, j] = problem.link_bytes[j]
    b = np.array([problem.space_budget, *problem.link_budgets], dtype=np.int64)
    return rows, b


def _simplex_max(c: np.ndarray, A: np.ndarray, b: np.ndarray,
                 max_iter: int = 50_000) -> tuple[float, np.ndarray]:
    """Maximize ``c x`` over ``A x <= b, x >= 0`` with ``b >= 0``.

    Dense tableau simplex with Bland's rule on both the entering and the
    leaving choice, so it cannot cycle.  The caller guarantees a bounded
    feasible region (every variable has an explicit upper-bound row).
    """
    m, n = A.shape
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    T[m, :n] = -c
    basis = list(range(n, n + m))
    for _ in range(max_iter):
        enter = -1
        for j in range(n + m):
            if T[m, j] < -1e-9:
                enter = j
                break
        if enter < 0:
            x = np.zeros(n)
            for i, var in enumerate(basis):
                if var < n:
                    x[var] = T[i, -1]
            return float(T[m, -1]), x
        col = T[:m, enter]
        ratios = np.where(col > 1e-9, T[:m, -1] / np.where(col > 1e-9, col, 1.0),
                          np.inf)
        best = ratios.min()
        if not np.isfinite(best):
            raise SolverError("relaxation is unbounded")
        leave = min((i for i in range(m) if ratios[i] <= best + 1e-9),
                    key=lambda i: basis[i])
        pivot_row = T[leave] / T[leave, enter]
        column = T[:, enter].copy()
        T -= np.outer(column, pivot_row)
        T[leave] = pivot_row
        basis[leave] = enter
    raise SolverError("simplex iteration limit reached")


def solve_relaxation(problem: PlacementProblem,
                     fixed: dict[int, int] | None = None
                     ) -> tuple[float, np.ndarray] | None:
    """LP bound of the instance with some items pinned to 0 or 1.

    Returns ``(value, x)`` with pinned values reflected in ``x``, or
    ``None`` when the pinned-in items already overrun a budget.
    """
    fixed = fixed or {}
    rows, b = _matrix(problem)
    n = problem.n_items
    taken = sorted(j for j, v in fixed.items() if v == 1)
    b_eff = b.astype(float)
    if taken:
        b_eff -= rows[:, taken].sum(axis=1)
    if np.any(b_eff < 0):
        return None
    offset = 0.0
    for j in taken:
        offset += problem.ps[j]
    x = np.zeros(n)
    for j, v in fixed.items():
        x[j] = v
    free = [j for j in range(n) if j not in fixed]
    if not free:
        return offset, x
    A = np.vstack([rows[:, free].astype(float), np.eye(len(free))])
    b_ub = np.concatenate([b_eff, np.ones(len(free))])
    c = np.array([problem.ps[j] for j in free])
    value, x_free = _simplex_max(c, A, b_ub)
    for pos, j in enumerate(free):
        x[j] = x_free[pos]
    return offset + value, x


def _exact_objective(ps: tuple[float, ...], selected: tuple[int, ...]) -> float:
    total = 0.0
    for j in selected:
        total += ps[j]
    return total


def _exact_feasible(rows: np.ndarray, b: np.ndarray,
                    selected: tuple[int, ...]) -> bool:
    if not selected:
        return True
    used = rows[:, list(selected)].sum(axis=1)
    return bool(np.all(used <= b))


def branch_and_bound(problem: PlacementProblem,
                     node_limit: int = 1_000_000) -> PlacementSolution:
    """Solve the placement instance to proven optimality.

    Best-first search: nodes are ordered by LP bound (ties explored in
    creation order, with the take-the-item child created first).  Integral
    LP solutions are re-verified in exact integer arithmetic before they
    may become the incumbent, so float drift in the simplex can never
    produce an infeasible answer.
    """
    n = problem.n_items
    rows, b = _matrix(problem)
    best_obj = 0.0
    best_sel: tuple[int, ...] = ()
    heap: list[tuple[float, int, dict[int, int], np.ndarray]] = []
    seq = 0
    root = solve_relaxation(problem)
    if root is not None:
        heap.append((-root[0], seq, {}, root[1]))
        seq += 1
    nodes = 0
    while heap:
        neg_bound, _, fixed, x = heapq.heappop(heap)
        nodes += 1
        if nodes > node_limit:
            raise SolverError(f"node limit {node_limit} exceeded")
        if -neg_bound <= best_obj + _PRUNE_TOL:
            continue
        branch_j = -1
        branch_dist = 2.0
        for j in range(n):
            if j in fixed:
                continue
            frac = abs(x[j] - round(x[j]))
            if frac > _SNAP_TOL:
                dist = abs(x[j] - 0.5)
                if dist < branch_dist:
                    branch_dist = dist
                    branch_j = j
        if branch_j < 0:
            selected = tuple(j for j in range(n)
                             if (fixed[j] if j in fixed else round(x[j])) == 1)
            if _exact_feasible(rows, b, selected):
                exact = _exact_objective(problem.ps, selected)
                if exact > best_obj:
                    best_obj = exact
                    best_sel = selected
                continue
            # The snapped point is infeasible in exact bytes; keep splitting
            # on the least settled item until pinning resolves it.
            free = [j for j in range(n) if j not in fixed]
            if not free:
                continue
            branch_j = min(free, key=lambda j: (abs(x[j] - 0.5), j))
        for value in (1, 0):
            child = dict(fixed)
            child[branch_j] = value
            result = solve_relaxation(problem, child)
            if result is None:
                continue
            bound, child_x = result
            if bound <= best_obj + _PRUNE_TOL:
                continue
            heapq.heappush(heap, (-bound, seq, child, child_x))
            seq += 1
    used = rows[:, list(best_sel)].sum(axis=1) if best_sel else np.zeros(
        len(b), dtype=np.int64)
    return PlacementSolution(selected=best_sel, objective=best_obj,
                             nodes=nodes, bytes_used=tuple(int(v) for v in used))


def _mask_tables(rows: np.ndarray, ps: list[float]
                 ) -> tuple[np.ndarray, np.ndarray]:
    """Constraint sums and objective for every subset of the given items."""
    k = rows.shape[1]
    sums = np.zeros((1 << k, rows.shape[0]), dtype=np.int64)
    obj = np.zeros(1 << k)
    for mask in range(1, 1 << k):
        low = mask & -mask
        prev = mask ^ low
        j = low.bit_length() - 1
        sums[mask] = sums[prev] + rows[:, j]
        obj[mask] = obj[prev] + ps[j]
    return sums, obj


def _mask_bits(mask: int, offset: int) -> list[int]:
    out = []
    j = 0
    while mask:
        if mask & 1:
            out.append(offset + j)
        mask >>= 1
        j += 1
    return out


def brute_force_oracle(problem: PlacementProblem,
                       max_items: int = 22) -> tuple[float, tuple[int, ...]]:
    """Exhaustive reference answer for small instances.

    Enumerates the two item halves separately and combines them with
    outer sums; every near-maximal float combination is re-scored with
    the same index-ordered exact sum the solver reports, so the returned
    objective is directly comparable.
    """
    n = problem.n_items
    if n > max_items:
        raise ValueError(f"oracle handles at most {max_items} items, got {n}")
    if n == 0:
        return 0.0, ()
    rows, b = _matrix(problem)
    half = n // 2
    left_sums, left_obj = _mask_tables(rows[:, :half], list(problem.ps[:half]))
    right_sums, right_obj = _mask_tables(rows[:, half:], list(problem.ps[half:]))
    feasible = np.ones((left_sums.shape[0], right_sums.shape[0]), dtype=bool)
    for r in range(rows.shape[0]):
        feasible &= (left_sums[:, r][:, None] + right_sums[:, r][None, :]) <= b[r]
    combined = np.where(feasible, left_obj[:, None] + right_obj[None, :],
                        -np.inf)
    top = combined.max()
    near = np.argwhere(combined >= top - 1e-6)
    best_exact = -1.0
    best_sel: tuple[int, ...] = ()
    for i, j in near[:50_000]:
        selected = tuple(_mask_bits(int(i), 0) + _mask_bits(int(j), half))
        exact = _exact_objective(problem.ps, selected)
        if exact > best_exact:
            best_exact = exact
            best_sel = selected
    return best_exact, best_sel


def dump_problem(problem: PlacementProblem) -> str:
    """Serialize an instance to the line format the CLI solve command reads."""
    lines = ["budgets " + " ".join(
        str(v) for v in (problem.space_budget, *problem.link_budgets))]
    for j in range(problem.n_items):
        parts = ["item", repr(problem.ps[j]), str(problem.sizes[j])]
        parts += [str(v) for v in problem.link_bytes[j]]
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def load_problem(text: str) -> PlacementProblem:
    """Parse the ``budgets``/``item`` line format; raises ValueError."""
    budgets: list[int] | None = None
    ps: list[float] = []
    sizes: list[int] = []
    link_bytes: list[tuple[int, ...]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if fields[0] == "budgets":
            if budgets is not None:
                raise ValueError(f"line {lineno}: duplicate budgets line")
            if len(fields) < 3:
                raise ValueError(f"line {lineno}: budgets needs space plus "
                                 "at least one link")
            budgets = [int(v) for v in fields[1:]]
        elif fields[0] == "item":
            if budgets is None:
                raise ValueError(f"line {lineno}: item before budgets")
            expected = 2 + len(budgets) - 1
            if len(fields) - 1 != expected:
                raise ValueError(f"line {lineno}: item needs {expected} "
                                 f"fields, got {len(fields) - 1}")
            ps.append(float(fields[1]))
            sizes.append(int(fields[2]))
            link_bytes.append(tuple(int(v) for v in fields[3:]))
        else:
            raise ValueError(f"line {lineno}: unknown directive {fields[0]!r}")
    if budgets is None:
        raise ValueError("missing budgets line")
    return PlacementProblem(ps=tuple(ps), sizes=tuple(sizes),
                            link_bytes=tuple(link_bytes),
                            space_budget=budgets[0],
                            link_budgets=tuple(budgets[1:]))
