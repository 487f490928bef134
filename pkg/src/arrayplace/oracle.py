"""Slow, independent reference implementations.

Nothing here calls into the search, propagation or optimizer code it is
used to check; geometry and turn angles are recomputed from node
coordinates.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass

import numpy as np


class OracleTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class OracleConfig:
    max_grid_nodes: int = 25
    max_tuples: int = 10**5
    power_levels: int = 10**6

    def __post_init__(self):
        if self.max_grid_nodes <= 0 or self.max_tuples <= 0 or self.power_levels <= 1:
            raise ValueError("oracle limits must be positive")


# -- geometry -----------------------------------------------------------------


def point_in_polygon(x: float, y: float, poly) -> bool:
    """Even-odd ray casting; points on an edge or vertex count as inside."""
    n = len(poly)
    inside = False
    for k in range(n):
        x1, y1 = poly[k]
        x2, y2 = poly[(k + 1) % n]
        cross = (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1)
        if (
            abs(cross) <= 1e-12
            and min(x1, x2) - 1e-12 <= x <= max(x1, x2) + 1e-12
            and min(y1, y2) - 1e-12 <= y <= max(y1, y2) + 1e-12
        ):
            return True
        if (y1 > y) != (y2 > y):
            x_cross = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < x_cross:
                inside = not inside
    return inside


def blocked_scan(env) -> set[tuple[int, int]]:
    """(col, row) of lattice points inside or on some obstacle."""
    s = env.grid_spacing
    out = set()
    for row in range(env.nrows):
        for col in range(env.ncols):
            if any(point_in_polygon(col * s, row * s, p) for p in env.obstacles):
                out.add((col, row))
    return out


def _king_moves(col, row):
    for dc in (-1, 0, 1):
        for dr in (-1, 0, 1):
            if dc or dr:
                yield dc, dr


def reachable_from_boundary(ncols, nrows, blocked: set) -> set:
    """Breadth-first flood from free boundary cells over king moves, refusing
    diagonal squeezes between two blocked orthogonal cells."""

    def free(c, r):
        return 0 <= c < ncols and 0 <= r < nrows and (c, r) not in blocked

    frontier = [
        (c, r)
        for c in range(ncols)
        for r in range(nrows)
        if (c in (0, ncols - 1) or r in (0, nrows - 1)) and free(c, r)
    ]
    seen = set(frontier)
    while frontier:
        nxt = []
        for c, r in frontier:
            for dc, dr in _king_moves(c, r):
                c2, r2 = c + dc, r + dr
                if not free(c2, r2) or (c2, r2) in seen:
                    continue
                if dc and dr and not free(c + dc, r) and not free(c, r + dr):
                    continue
                seen.add((c2, r2))
                nxt.append((c2, r2))
        frontier = nxt
    return seen


def simplified_scan(ncols, nrows, blocked: set, accessible: set) -> set:
    out = set()
    for c, r in accessible:
        on_edge = c in (0, ncols - 1) or r in (0, nrows - 1)
        near = any((c + dc, r + dr) in blocked for dc, dr in _king_moves(c, r))
        if on_edge or near:
            out.add((c, r))
    return out


def octile(dx: float, dy: float) -> float:
    a, b = abs(dx), abs(dy)
    return max(a, b) + (math.sqrt(2.0) - 1.0) * min(a, b)


# -- paths --------------------------------------------------------------------


@dataclass(frozen=True)
class PathOracleResult:
    best_value: float
    best_value_lengths: tuple[float, ...]
    best_value_path: tuple[int, ...]
    min_length: float
    min_length_path: tuple[int, ...]


def _adjacency(graph):
    xy = graph.grid.xy
    active = [int(n) for n in graph.grid.active_ids]
    adj = {}
    for n in active:
        out = []
        for j in graph.neighbors[n]:
            j = int(j)
            if j >= 0:
                dx, dy = xy[j] - xy[n]
                out.append((j, math.hypot(dx, dy), math.atan2(dy, dx)))
        adj[n] = out
    return active, adj


def _turn_gamma(h_in: float, h_out: float) -> float:
    turn = abs(math.degrees(h_out - h_in)) % 360.0
    turn = min(turn, 360.0 - turn)
    return 1.0 - round(turn / 45.0) / 4.0


def simple_path_optima(graph, source: int, v_init: float = 10000.0, angular=True,
                       config: OracleConfig = OracleConfig()):
    """Exhaustive depth-first scan of simple paths from ``source``.

    Returns ``{dest: PathOracleResult}``.  The value of a path folds
    ``v <- gamma * v - length`` over its arcs starting from ``v_init``, with
    no rescaling.  Branches are cut only when an octile-distance bound
    proves no destination can reach or tie its current record.
    """
    active, adj = _adjacency(graph)
    if len(active) > config.max_grid_nodes:
        raise OracleTooLarge(
            f"{len(active)} nodes exceeds the path oracle limit of {config.max_grid_nodes}"
        )
    # only nodes connected to the source can ever be recorded, so only
    # they may keep a branch alive
    component, stack = {source}, [source]
    while stack:
        u = stack.pop()
        for j, _, _ in adj[u]:
            if j not in component:
                component.add(j)
                stack.append(j)
    active = [n for n in active if n in component]
    xy = {n: tuple(graph.grid.xy[n]) for n in active}
    best_v = {n: -math.inf for n in active}
    best_v_len = {n: [] for n in active}
    best_v_path = {n: () for n in active}
    best_len = {n: math.inf for n in active}
    best_len_path = {n: () for n in active}

    def bound_blocks(u, v, length, visited):
        ux, uy = xy[u]
        for w in active:
            if w in visited:
                continue
            d = octile(xy[w][0] - ux, xy[w][1] - uy)
            if length + d <= best_len[w] + 1e-12:
                return False
            if v >= 0:
                if v - d >= best_v[w]:
                    return False
            elif best_v[w] < 0:
                return False
        return True

    def record(w, v, length, path):
        if v > best_v[w]:
            best_v[w] = v
            best_v_len[w] = [length]
            best_v_path[w] = tuple(path)
        elif v == best_v[w]:
            best_v_len[w].append(length)
        if length < best_len[w]:
            best_len[w] = length
            best_len_path[w] = tuple(path)

    path = [source]
    visited = {source}
    record(source, v_init, 0.0, path)

    def dfs(u, v, length, heading):
        if bound_blocks(u, v, length, visited):
            return
        for j, arc, h in adj[u]:
            if j in visited:
                continue
            gamma = 1.0 if (heading is None or not angular) else _turn_gamma(heading, h)
            v2 = gamma * v - arc
            length2 = length + arc
            visited.add(j)
            path.append(j)
            record(j, v2, length2, path)
            dfs(j, v2, length2, h)
            path.pop()
            visited.discard(j)

    dfs(source, v_init, 0.0, None)
    return {
        n: PathOracleResult(
            best_value=best_v[n],
            best_value_lengths=tuple(best_v_len[n]),
            best_value_path=best_v_path[n],
            min_length=best_len[n],
            min_length_path=best_len_path[n],
        )
        for n in active
        if best_len[n] < math.inf
    }


def enumerate_all_simple_paths(graph, source: int, dest: int, v_init: float = 10000.0,
                               angular: bool = True,
                               config: OracleConfig = OracleConfig()) -> PathOracleResult:
    """Best simple path from ``source`` to ``dest`` under the value recursion
    and under plain length."""
    results = simple_path_optima(graph, source, v_init, angular, config)
    if dest not in results:
        raise ValueError(f"{dest} not reachable from {source}")
    return results[dest]


def textbook_dijkstra(graph, source: int) -> dict[int, float]:
    """Classic Dijkstra on arc lengths recomputed from coordinates."""
    _, adj = _adjacency(graph)
    dist = {source: 0.0}
    done = set()
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for j, arc, _ in adj[u]:
            nd = d + arc
            if nd < dist.get(j, math.inf):
                dist[j] = nd
                heapq.heappush(heap, (nd, j))
    return dist


# -- placement ----------------------------------------------------------------


@dataclass(frozen=True)
class OraclePlacement:
    placement: tuple[int, ...]
    p_T: float
    threshold_gain: float
    covered_count: int


def _tuple_gain(beta, reach, users, placement):
    """Per-user combined gain; terms are added smallest first, the same
    floating-point convention the optimizer documents."""
    g = []
    for i in users:
        terms = sorted(float(beta[i, t, l]) if reach[i, t, l] else 0.0 for t, l in enumerate(placement))
        total = terms[0]
        for x in terms[1:]:
            total = total + x
        g.append(total)
    return g


def _power_grid(beta, reach, users, n_arrays, p_r, levels):
    """Log-spaced powers spanning every break-even power any tuple can need."""
    sub = np.where(reach[users], beta[users], 0.0)
    positive = sub[sub > 0]
    if positive.size == 0:
        return None
    g_max = float(sub.max(axis=2).sum(axis=1).max())
    lo, hi = p_r / g_max, p_r / float(positive.min())
    grid = np.geomspace(lo, hi, levels) if hi > lo else np.array([lo])
    grid[0], grid[-1] = lo, hi
    return grid


def _min_power(g, k, p_r, grid):
    """Smallest power covering ``k`` users: bracket on the log grid, then
    pick the exact threshold among the users' own break-even powers.
    Returns the threshold gain, or None if infeasible."""
    positive = [x for x in g if x > 0]
    if len(positive) < k:
        return None
    need = np.array([p_r / x for x in positive])
    first = np.minimum(np.searchsorted(grid, need, side="left"), len(grid) - 1)
    level_idx = int(np.sort(first)[k - 1])
    p_hi = grid[level_idx] * (1 + 1e-9)
    p_lo = grid[level_idx - 1] * (1 - 1e-9) if level_idx > 0 else 0.0
    best = None
    for x in positive:
        if not p_lo <= p_r / x <= p_hi:
            continue
        served = sum(1 for y in positive if y >= x)
        if served >= k and (best is None or x > best):
            best = x
    if best is None:
        # the bracket is only a search aid; fall back to the full scan
        for x in positive:
            served = sum(1 for y in positive if y >= x)
            if served >= k and (best is None or x > best):
                best = x
    return best


def brute_force_placement(inst, config: OracleConfig = OracleConfig()) -> OraclePlacement:
    """Scan every candidate tuple; raises ``ValueError`` when none is
    feasible."""
    sizes = [len(c) for c in inst.candidates]
    total = math.prod(sizes)
    if total > config.max_tuples:
        raise OracleTooLarge(f"{total} tuples exceeds the oracle limit {config.max_tuples}")
    users = [int(i) for i in inst.users]
    k = math.ceil(inst.coverage * len(users) - 1e-9)
    beta, reach = inst.gain.beta, inst.gain.reachable
    grid = _power_grid(beta, reach, users, len(sizes), inst.p_r, config.power_levels)
    best = None
    for placement in itertools.product(*(range(s) for s in sizes)):
        if grid is None:
            break
        g = _tuple_gain(beta, reach, users, placement)
        thr = _min_power(g, k, inst.p_r, grid)
        if thr is None:
            continue
        if best is None or thr > best[1]:
            best = (placement, thr, sum(1 for x in g if x >= thr))
    if best is None:
        raise ValueError("infeasible: no placement reaches the coverage level")
    placement, thr, served = best
    return OraclePlacement(
        placement=tuple(placement), p_T=inst.p_r / thr, threshold_gain=thr, covered_count=served
    )


# -- channel aggregation --------------------------------------------------------


def summed_channel_power(rows, n_subcarriers: int) -> dict[tuple[int, int, int], float]:
    """``{(user, array, candidate): sum |h|^2 / |F|}`` by plain looping over
    dump rows ``(user, array, antenna, candidate, subcarrier, re, im)``."""
    out: dict[tuple[int, int, int], float] = {}
    for user, arr, _ant, cand, _sub, re, im in rows:
        key = (int(user), int(arr), int(cand))
        out[key] = out.get(key, 0.0) + abs(complex(re, im)) ** 2
    return {k: v / n_subcarriers for k, v in out.items()}


def bisection_power(gains, k: int, p_r: float, iters: int = 200) -> float:
    """Smallest p_T with at least ``k`` of ``gains`` satisfying
    ``p_T * g >= p_r``, by bisection on a log scale."""
    gains = [float(g) for g in gains]

    def served(p):
        return sum(1 for g in gains if p * g >= p_r)

    positive = [g for g in gains if g > 0]
    if len(positive) < k:
        raise ValueError("infeasible")
    lo, hi = p_r / max(positive) / 2, p_r / min(positive) * 2
    for _ in range(iters):
        mid = math.sqrt(lo * hi)
        if served(mid) >= k:
            hi = mid
        else:
            lo = mid
    return hi
