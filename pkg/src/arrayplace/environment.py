"""Cell geometry: loading, rasterization onto the user-location lattice,
pruning of enclosed space, the simplified evaluation set and the candidate
array locations on the four region edges.

Node ids are row-major over the full lattice, ``id = row * ncols + col``,
with ``x = col * spacing`` and ``y = row * spacing``.  Blocked and removed
nodes keep their ids so every per-node table can be indexed directly.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import shapely
from shapely.geometry import LinearRing, Polygon

DEFAULT_RATIOS = tuple(k / 10 for k in range(11))

# Edge order fixes which array sits on which edge: bottom, right, top, left.
EDGE_NAMES = ("bottom", "right", "top", "left")

# (dcol, drow) for the eight neighbours; index doubles as the angle code.
OFFSETS = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))


class InvalidEnvironment(ValueError):
    """Raised for malformed or geometrically inconsistent cell descriptions."""


@dataclass(frozen=True)
class Environment:
    width: float
    height: float
    obstacles: tuple[tuple[tuple[float, float], ...], ...] = ()
    grid_spacing: float = 1.0
    array_height: float = 30.0
    user_height: float = 1.5

    def __post_init__(self):
        obstacles = tuple(
            tuple((float(x), float(y)) for x, y in poly) for poly in self.obstacles
        )
        object.__setattr__(self, "obstacles", obstacles)
        self.validate()

    def validate(self) -> None:
        if not (self.width > 0 and self.height > 0):
            raise InvalidEnvironment("region width and height must be positive")
        if not self.grid_spacing > 0:
            raise InvalidEnvironment("grid spacing must be positive")
        for name, length in (("width", self.width), ("height", self.height)):
            steps = length / self.grid_spacing
            if abs(steps - round(steps)) > 1e-9:
                raise InvalidEnvironment(
                    f"region {name} {length} is not a multiple of the grid spacing"
                )
        for k, poly in enumerate(self.obstacles):
            verts = list(poly)
            if len(verts) > 1 and verts[0] == verts[-1]:
                verts = verts[:-1]
            if len(verts) < 3:
                raise InvalidEnvironment(f"obstacle {k} has fewer than 3 vertices")
            for x, y in verts:
                if not (0 <= x <= self.width and 0 <= y <= self.height):
                    raise InvalidEnvironment(
                        f"obstacle outside region: obstacle {k} vertex ({x}, {y})"
                    )
            ring = LinearRing(verts)
            if not ring.is_simple or Polygon(verts).area == 0:
                raise InvalidEnvironment(f"obstacle {k} is not a simple polygon")

    @property
    def ncols(self) -> int:
        return int(round(self.width / self.grid_spacing)) + 1

    @property
    def nrows(self) -> int:
        return int(round(self.height / self.grid_spacing)) + 1


def environment_from_dict(data: dict) -> Environment:
    try:
        return Environment(
            width=float(data["width_m"]),
            height=float(data["height_m"]),
            obstacles=tuple(
                tuple((float(x), float(y)) for x, y in poly)
                for poly in data.get("obstacles", [])
            ),
            grid_spacing=float(data.get("grid_spacing_m", 1.0)),
            array_height=float(data.get("array_height_m", 30.0)),
            user_height=float(data.get("user_height_m", 1.5)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InvalidEnvironment):
            raise
        raise InvalidEnvironment(f"cannot parse environment: {exc!r}") from exc


def load_environment(path) -> Environment:
    """Read a JSON cell description (``width_m``, ``height_m``,
    ``grid_spacing_m``, ``obstacles`` and optional heights)."""
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidEnvironment(f"cannot parse environment file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise InvalidEnvironment("environment file must hold a JSON object")
    return environment_from_dict(data)


def environment_to_dict(env: Environment) -> dict:
    return {
        "width_m": env.width,
        "height_m": env.height,
        "grid_spacing_m": env.grid_spacing,
        "obstacles": [[list(v) for v in poly] for poly in env.obstacles],
        "array_height_m": env.array_height,
        "user_height_m": env.user_height,
    }


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class NodeGrid:
    """Lattice of user locations with per-node flags (flat, indexed by id)."""

    env: Environment
    blocked: np.ndarray
    removed: np.ndarray
    edge: np.ndarray
    near_object: np.ndarray
    pruned: bool = False
    _xy: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def ncols(self) -> int:
        return self.env.ncols

    @property
    def nrows(self) -> int:
        return self.env.nrows

    @property
    def spacing(self) -> float:
        return self.env.grid_spacing

    @property
    def n_nodes(self) -> int:
        return self.ncols * self.nrows

    @property
    def active(self) -> np.ndarray:
        return ~self.blocked & ~self.removed

    @property
    def active_ids(self) -> np.ndarray:
        return np.flatnonzero(self.active)

    @property
    def xy(self) -> np.ndarray:
        """(n_nodes, 2) array of node coordinates in meters."""
        return self._xy

    def node_id(self, col: int, row: int) -> int:
        if not (0 <= col < self.ncols and 0 <= row < self.nrows):
            raise IndexError(f"lattice position ({col}, {row}) outside grid")
        return row * self.ncols + col

    def col_row(self, node: int) -> tuple[int, int]:
        row, col = divmod(int(node), self.ncols)
        return col, row

    def node_at(self, x: float, y: float) -> int:
        s = self.spacing
        return self.node_id(int(round(x / s)), int(round(y / s)))


def _lattice_xy(env: Environment) -> np.ndarray:
    cols = np.arange(env.ncols) * env.grid_spacing
    rows = np.arange(env.nrows) * env.grid_spacing
    xx, yy = np.meshgrid(cols, rows)
    return np.column_stack([xx.ravel(), yy.ravel()])


def _neighbour_mask(mask2d: np.ndarray) -> np.ndarray:
    """True where some 8-neighbour is True."""
    padded = np.pad(mask2d, 1)
    out = np.zeros_like(mask2d)
    h, w = mask2d.shape
    for dc, dr in OFFSETS:
        out |= padded[1 + dr : 1 + dr + h, 1 + dc : 1 + dc + w]
    return out


def _grid_with_blocked(env: Environment, xy: np.ndarray, blocked: np.ndarray) -> NodeGrid:
    x, y = xy[:, 0], xy[:, 1]
    edge = (
        np.isclose(x, 0.0)
        | np.isclose(x, env.width)
        | np.isclose(y, 0.0)
        | np.isclose(y, env.height)
    )
    near = _neighbour_mask(blocked.reshape(env.nrows, env.ncols)).ravel()
    return NodeGrid(
        env=env,
        blocked=_frozen(blocked),
        removed=_frozen(np.zeros(len(xy), dtype=bool)),
        edge=_frozen(edge),
        near_object=_frozen(near & ~blocked),
        _xy=_frozen(xy),
    )


def rasterize(env: Environment) -> NodeGrid:
    """Place a node at every lattice point and flag the ones covered by an
    obstacle (points on a polygon boundary count as inside)."""
    xy = _lattice_xy(env)
    blocked = np.zeros(len(xy), dtype=bool)
    if env.obstacles:
        points = shapely.points(xy)
        for poly in env.obstacles:
            blocked |= shapely.covers(Polygon(poly), points)
    return _grid_with_blocked(env, xy, blocked)


def grid_from_mask(mask, spacing: float = 1.0) -> NodeGrid:
    """Unpruned grid whose blocked nodes are given directly.

    ``mask[row][col]`` is truthy for blocked lattice points, row 0 at y = 0.
    """
    mask = np.asarray(mask, dtype=bool)
    nrows, ncols = mask.shape
    env = Environment((ncols - 1) * spacing, (nrows - 1) * spacing, grid_spacing=spacing)
    return _grid_with_blocked(env, _lattice_xy(env), mask.ravel().copy())


def passable_moves(free2d: np.ndarray, col: int, row: int):
    """Yield (code, col, row) of moves from a free cell that the grid graph
    allows: the target must be free and a diagonal is refused when both
    orthogonal cells it squeezes between are not free."""
    h, w = free2d.shape
    for code, (dc, dr) in enumerate(OFFSETS):
        c2, r2 = col + dc, row + dr
        if not (0 <= c2 < w and 0 <= r2 < h) or not free2d[r2, c2]:
            continue
        if dc and dr and not free2d[row, c2] and not free2d[r2, col]:
            continue
        yield code, c2, r2


def prune_enclosed(grid: NodeGrid) -> NodeGrid:
    """Flag free nodes that cannot be reached from the region boundary."""
    h, w = grid.nrows, grid.ncols
    free = ~grid.blocked.reshape(h, w)
    edge = grid.edge.reshape(h, w)
    seen = np.zeros((h, w), dtype=bool)
    queue = deque()
    for r, c in zip(*np.nonzero(free & edge)):
        seen[r, c] = True
        queue.append((c, r))
    if not queue:
        raise InvalidEnvironment("cell has no accessible boundary")
    while queue:
        c, r = queue.popleft()
        for _, c2, r2 in passable_moves(free, c, r):
            if not seen[r2, c2]:
                seen[r2, c2] = True
                queue.append((c2, r2))
    removed = (free & ~seen).ravel()
    return NodeGrid(
        env=grid.env,
        blocked=grid.blocked,
        removed=_frozen(removed),
        edge=grid.edge,
        near_object=grid.near_object,
        pruned=True,
        _xy=grid.xy,
    )


def build_grid(env: Environment) -> NodeGrid:
    return prune_enclosed(rasterize(env))


def simplify_cell(grid: NodeGrid) -> np.ndarray:
    """Sorted ids of active nodes lying on the region edge or next to an
    obstacle; this is the evaluation set used by the optimizer."""
    if not grid.pruned:
        raise ValueError("simplify_cell needs a pruned grid")
    keep = grid.active & (grid.edge | grid.near_object)
    return np.flatnonzero(keep)


def _round_half_away(x: float) -> int:
    return int(math.floor(abs(x) + 0.5 + 1e-9)) * (1 if x >= 0 else -1)


def edge_lattice_position(grid: NodeGrid, edge: int, ratio: float) -> tuple[int, int]:
    """(col, row) of the lattice point at ``ratio`` along an edge.  Bottom
    and top are measured from x = 0, left and right from y = 0."""
    env = grid.env
    s = env.grid_spacing
    if edge in (0, 2):
        step = _round_half_away(ratio * env.width / s)
        return step, (0 if edge == 0 else grid.nrows - 1)
    step = _round_half_away(ratio * env.height / s)
    return (grid.ncols - 1 if edge == 1 else 0), step


def candidate_locations(grid: NodeGrid, ratios=DEFAULT_RATIOS) -> list[list[int]]:
    """Candidate node ids per array, one list per edge (bottom, right, top,
    left).  Blocked or removed positions are skipped, duplicates dropped."""
    if not grid.pruned:
        raise ValueError("candidate_locations needs a pruned grid")
    ratios = list(ratios)
    if any(not 0 <= r <= 1 for r in ratios):
        raise ValueError("candidate ratios must lie in [0, 1]")
    if ratios != sorted(ratios):
        raise ValueError("candidate ratios must be sorted")
    active = grid.active
    out = []
    for edge in range(4):
        ids = []
        for ratio in ratios:
            node = grid.node_id(*edge_lattice_position(grid, edge, ratio))
            if active[node] and node not in ids:
                ids.append(node)
        if not ids:
            raise InvalidEnvironment(f"edge fully blocked: {EDGE_NAMES[edge]}")
        out.append(ids)
    return out
