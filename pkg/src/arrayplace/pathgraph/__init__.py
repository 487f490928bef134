"""Grid graph over the active user locations and the best-path search that
turns it into effective propagation distances.

The search itself lives in a compiled kernel (``_kernel``) with a
pure-Python twin (``_pure``).  The compiled one is used when it imports,
unless ``ARRAYPLACE_PURE_PYTHON`` is set in the environment.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from ..environment import OFFSETS, NodeGrid, passable_moves
from . import _pure

try:
    if os.environ.get("ARRAYPLACE_PURE_PYTHON"):
        raise ImportError("pure Python requested")
    from ._kernel import best_paths_kernel as _compiled_kernel
except ImportError:
    _compiled_kernel = None

BACKEND = "compiled" if _compiled_kernel is not None else "python"

DEFAULT_V_INIT = 10000.0
DEFAULT_MAX_RESCALES = 10**6

MODELS = ("shortest_path", "shortest_path_angular")


class RescaleDivergence(RuntimeError):
    """The value rescaling branch fired more often than the configured cap."""


def _kernel(backend: str | None):
    backend = backend or BACKEND
    if backend == "compiled":
        if _compiled_kernel is None:
            raise RuntimeError("compiled kernel not available")
        return _compiled_kernel
    if backend == "python":
        return _pure.best_paths_kernel
    raise ValueError(f"unknown backend {backend!r}")


@dataclass(frozen=True, eq=False)
class Graph:
    """8-connected arcs between active nodes.

    ``neighbors[n, code]`` is the node reached from ``n`` along angle code
    ``code`` (multiples of 45 degrees counter-clockwise from +x), or -1.
    """

    grid: NodeGrid
    neighbors: np.ndarray

    @property
    def spacing(self) -> float:
        return self.grid.spacing

    @property
    def n_nodes(self) -> int:
        return self.neighbors.shape[0]

    def arc_length(self, code: int) -> float:
        return self.spacing * (math.sqrt(2.0) if code % 2 else 1.0)

    def arcs(self, node: int):
        """Yield (neighbor, code, length) for every arc leaving ``node``."""
        for code in range(8):
            j = int(self.neighbors[node, code])
            if j >= 0:
                yield j, code, self.arc_length(code)

    def angle_code(self, i: int, j: int) -> int:
        codes = np.flatnonzero(self.neighbors[i] == j)
        if len(codes) == 0:
            raise KeyError(f"no arc from {i} to {j}")
        return int(codes[0])

    def degree(self, node: int) -> int:
        return int((self.neighbors[node] >= 0).sum())


def build_graph(grid: NodeGrid) -> Graph:
    if not grid.pruned:
        raise ValueError("build_graph needs a pruned grid")
    h, w = grid.nrows, grid.ncols
    free = grid.active.reshape(h, w)
    nbr = np.full((grid.n_nodes, 8), -1, dtype=np.int64)
    for r, c in zip(*np.nonzero(free)):
        node = r * w + c
        for code, c2, r2 in passable_moves(free, c, r):
            nbr[node, code] = r2 * w + c2
    nbr.setflags(write=False)
    return Graph(grid=grid, neighbors=nbr)


def turn_factor(code_in: int, code_out: int) -> float:
    """Path-quality multiplier for turning from ``code_in`` to ``code_out``:
    1 going straight, falling linearly to 0 for a reversal."""
    delta = abs(code_out - code_in)
    delta = min(delta, 8 - delta)
    return (4 - delta) / 4.0


def angular_factor(graph: Graph, source: int, i: int, j: int, prev) -> float:
    if i == source:
        return 1.0
    p = prev[i]
    if p is None or p < 0:
        raise RuntimeError(f"node {i} has no predecessor but is not the source")
    return turn_factor(graph.angle_code(p, i), graph.angle_code(i, j))


@dataclass(frozen=True, eq=False)
class PathResult:
    """Per-node outcome of one search.  Unreached nodes carry ``dist = inf``,
    ``prev = -1`` and ``v = -inf``."""

    source: int
    dist: np.ndarray
    prev: np.ndarray
    v: np.ndarray
    rescales: int

    def path_to(self, node: int) -> list[int]:
        if not np.isfinite(self.dist[node]):
            raise ValueError(f"node {node} not reached from {self.source}")
        path = [int(node)]
        while path[-1] != self.source:
            path.append(int(self.prev[path[-1]]))
        return path[::-1]


def best_paths(
    graph: Graph,
    source: int,
    use_angular_penalty: bool,
    v_init: float = DEFAULT_V_INIT,
    max_rescales: int = DEFAULT_MAX_RESCALES,
    backend: str | None = None,
) -> PathResult:
    """Best-first search by maximum remaining path quality.

    Relaxing arc (i, j) proposes ``gamma * v[i] - length``; when an
    improving proposal would go negative every finite value is lifted by
    ``v_init`` and ``i`` goes back into the queue.
    """
    source = int(source)
    if graph.grid.blocked[source] or graph.grid.removed[source]:
        raise ValueError(f"source {source} is not an active node")
    dist, prev, v, rescales = _kernel(backend)(
        graph.neighbors,
        graph.arc_length(0),
        graph.arc_length(1),
        source,
        bool(use_angular_penalty),
        float(v_init),
        int(max_rescales),
    )
    if rescales == _pure.DIVERGED:
        raise RescaleDivergence(
            f"rescale divergence: more than {max_rescales} rescales from source {source}"
        )
    for a in (dist, prev, v):
        a.setflags(write=False)
    return PathResult(source=source, dist=dist, prev=prev, v=v, rescales=int(rescales))


@dataclass(frozen=True, eq=False)
class DistanceField:
    """Effective distance ``values[i, t, l]`` from candidate ``l`` of array
    ``t`` to node ``i``; candidate slots beyond ``len(candidates[t])`` are
    padding and never reachable."""

    model: str
    candidates: tuple[tuple[int, ...], ...]
    values: np.ndarray
    reachable: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.values.shape[0]

    @property
    def n_arrays(self) -> int:
        return len(self.candidates)


def empty_field_arrays(n_nodes: int, candidates):
    lmax = max(len(c) for c in candidates)
    values = np.full((n_nodes, len(candidates), lmax), np.inf)
    return values, np.zeros(values.shape, dtype=bool)


def freeze_field(model, candidates, values, reachable) -> DistanceField:
    values.setflags(write=False)
    reachable.setflags(write=False)
    return DistanceField(
        model=model,
        candidates=tuple(tuple(int(n) for n in c) for c in candidates),
        values=values,
        reachable=reachable,
    )


def distance_field(
    graph: Graph,
    sources,
    model: str,
    v_init: float = DEFAULT_V_INIT,
    backend: str | None = None,
) -> DistanceField:
    """Run one search per candidate location (``sources`` holds one list of
    node ids per array) and collect best-path lengths."""
    if model not in MODELS:
        raise ValueError(f"unknown graph model {model!r}; expected one of {MODELS}")
    angular = model == "shortest_path_angular"
    values, reachable = empty_field_arrays(graph.n_nodes, sources)
    cache: dict[int, np.ndarray] = {}
    for t, cands in enumerate(sources):
        for l, node in enumerate(cands):
            node = int(node)
            if not graph.grid.edge[node]:
                raise ValueError(f"candidate {node} is not on the region edge")
            if node not in cache:
                cache[node] = best_paths(graph, node, angular, v_init, backend=backend).dist
            d = cache[node]
            values[:, t, l] = d
            reachable[:, t, l] = np.isfinite(d)
    return freeze_field(model, sources, values, reachable)


__all__ = [
    "BACKEND",
    "DistanceField",
    "Graph",
    "MODELS",
    "OFFSETS",
    "PathResult",
    "RescaleDivergence",
    "angular_factor",
    "best_paths",
    "build_graph",
    "distance_field",
    "turn_factor",
]
