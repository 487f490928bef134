import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arrayplace import pathgraph as pg
from arrayplace.environment import Environment, build_grid, candidate_locations, grid_from_mask, prune_enclosed
from arrayplace.oracle import (
    OracleTooLarge,
    enumerate_all_simple_paths,
    octile,
    simple_path_optima,
    textbook_dijkstra,
)
from arrayplace.pathgraph import _pure
from arrayplace.propagation import euclidean_distance_field

from conftest import random_mask_grid

SQRT2 = math.sqrt(2.0)
BACKENDS = ["python"] + (["compiled"] if pg.BACKEND == "compiled" else [])


def graph_of(mask):
    return pg.build_graph(prune_enclosed(grid_from_mask(np.asarray(mask, dtype=bool))))


def empty_graph(ncols, nrows, spacing=1.0):
    return graph_of(np.zeros((nrows, ncols)))


# -- graph structure -----------------------------------------------------------


def test_empty_3x3_degrees():
    g = empty_graph(3, 3)
    assert g.degree(4) == 8
    assert [g.degree(n) for n in (0, 2, 6, 8)] == [3, 3, 3, 3]


def test_3x3_blocked_centre_hand_adjacency():
    g = graph_of([[0, 0, 0], [0, 1, 0], [0, 0, 0]])
    # ids: row * 3 + col; the ring of eight nodes around the blocked centre
    hand = {
        0: {1, 3}, 2: {1, 5}, 6: {3, 7}, 8: {5, 7},
        # edge midpoints keep the diagonals past a free corner
        1: {0, 2, 3, 5}, 3: {0, 6, 1, 7}, 5: {2, 8, 1, 7}, 7: {6, 8, 3, 5},
    }
    for node, expect in hand.items():
        assert {j for j, _, _ in g.arcs(node)} == expect
    assert g.degree(4) == 0


def test_diagonal_arc_code_and_length():
    g = pg.build_graph(build_grid(Environment(4, 4, grid_spacing=2.0)))
    j = g.grid.node_id(1, 1)
    assert g.angle_code(0, j) == 1
    arcs = {k: length for k, _, length in g.arcs(0)}
    assert arcs[j] == pytest.approx(2.0 * SQRT2, rel=1e-15)


def test_corner_rule_on_touching_corners():
    g = graph_of([[0, 1], [1, 0]])
    # each free node sits between two blocked orthogonals: no arcs at all
    assert g.degree(0) == 0 and g.degree(3) == 0
    g = graph_of([[0, 1], [0, 0]])
    assert g.neighbors[0, 1] == 3  # one free orthogonal keeps the diagonal


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_reverse_arc_consistency(seed):
    g = pg.build_graph(random_mask_grid(np.random.default_rng(seed), max_side=8, density=0.4))
    for i in g.grid.active_ids:
        for j, code, length in g.arcs(int(i)):
            assert g.angle_code(j, int(i)) == (code + 4) % 8
            assert length == g.arc_length((code + 4) % 8)


# -- angular factor --------------------------------------------------------------


def test_angular_anchors():
    assert pg.turn_factor(2, 2) == 1.0
    assert pg.turn_factor(0, 4) == 0.0
    assert pg.turn_factor(7, 1) == 0.5
    assert pg.turn_factor(1, 7) == 0.5
    assert [pg.turn_factor(0, k) for k in range(8)] == [1, 0.75, 0.5, 0.25, 0, 0.25, 0.5, 0.75]


def test_angular_factor_uses_prev():
    g = empty_graph(3, 3)
    res = pg.best_paths(g, 0, True)
    assert pg.angular_factor(g, 0, 0, 1, res.prev) == 1.0
    # prev of node 1 is the source (arrived along code 0); continuing +x is straight
    assert pg.angular_factor(g, 0, 1, 2, res.prev) == 1.0
    assert pg.angular_factor(g, 0, 1, 4, res.prev) == 0.5
    with pytest.raises(RuntimeError):
        pg.angular_factor(g, 0, 4, 5, np.full(9, -1))


# -- best paths ----------------------------------------------------------------


@pytest.mark.parametrize("backend", BACKENDS)
def test_octile_destination(backend):
    g = empty_graph(5, 5)
    res = pg.best_paths(g, 0, False, backend=backend)
    dest = g.grid.node_id(3, 4)
    assert res.dist[dest] == pytest.approx(3 * SQRT2 + 1, rel=1e-12)
    oracle = enumerate_all_simple_paths(g, 0, dest, angular=False)
    assert res.dist[dest] == pytest.approx(oracle.min_length, rel=1e-12)


def test_source_is_its_own_destination():
    res = pg.best_paths(empty_graph(4, 4), 5, True)
    assert res.dist[5] == 0.0 and res.prev[5] == -1
    assert res.path_to(5) == [5]


def test_straight_diagonal_has_no_penalty():
    g = empty_graph(5, 5)
    on = pg.best_paths(g, 0, True)
    off = pg.best_paths(g, 0, False)
    for k in range(5):
        n = g.grid.node_id(k, k)
        assert on.dist[n] == off.dist[n] == pytest.approx(k * SQRT2)


def test_wall_detour():
    mask = np.zeros((5, 5), dtype=bool)
    mask[0:4, 2] = True  # x = 2 for y in 0..3
    g = graph_of(mask)
    dest = g.grid.node_id(4, 0)
    res = pg.best_paths(g, 0, False)
    oracle = enumerate_all_simple_paths(g, 0, dest, angular=False)
    assert res.dist[dest] > 4
    assert res.dist[dest] == pytest.approx(oracle.min_length, rel=1e-12)
    assert res.dist[dest] == pytest.approx(4 + 4 * SQRT2, rel=1e-12)
    path = res.path_to(dest)
    assert path[0] == 0 and path[-1] == dest
    assert g.grid.node_id(2, 4) in path


def test_unreachable_nodes():
    g = graph_of([[0, 1, 0], [0, 1, 0], [0, 1, 0]])
    res = pg.best_paths(g, 0, True)
    assert np.isinf(res.dist[2]) and res.prev[2] == -1 and res.v[2] == -np.inf
    with pytest.raises(ValueError):
        res.path_to(2)


def test_inactive_source_rejected():
    g = graph_of([[0, 1], [0, 0]])
    with pytest.raises(ValueError):
        pg.best_paths(g, 1, False)


def test_oracle_two_node_path():
    g = graph_of([[0, 0], [1, 1]])
    assert g.degree(0) == 1
    r = enumerate_all_simple_paths(g, 0, 1, v_init=50.0)
    assert r.best_value == 49.0 and r.min_length == 1.0
    assert r.best_value_path == (0, 1)


def test_oracle_4x4_diagonal_and_refusal():
    g = empty_graph(4, 4)
    r = enumerate_all_simple_paths(g, 0, 15, angular=False)
    assert r.min_length == pytest.approx(3 * SQRT2)
    with pytest.raises(OracleTooLarge):
        simple_path_optima(empty_graph(6, 5), 0)


def test_4x4_one_blocked_against_oracle_and_hand_count():
    mask = np.zeros((4, 4), dtype=bool)
    mask[1, 1] = True
    g = graph_of(mask)
    # by hand: around the blocked node (1,1) to (2,2) costs 2 + sqrt2
    res = pg.best_paths(g, 0, False)
    assert res.dist[g.grid.node_id(2, 2)] == pytest.approx(2 + SQRT2)
    oracle = simple_path_optima(g, 0, angular=False)
    for n, o in oracle.items():
        assert res.dist[n] == pytest.approx(o.min_length, rel=1e-12)
    ang = pg.best_paths(g, 0, True)
    oracle = simple_path_optima(g, 0, angular=True)
    for n, o in oracle.items():
        assert ang.v[n] == pytest.approx(o.best_value, rel=1e-9)


def test_angular_search_is_not_exact_on_every_grid():
    # one label per node cannot track arrival headings; recorded as a
    # characterisation of the search, not as a desired outcome
    mask = np.zeros((4, 5), dtype=bool)
    mask[1, 0] = True
    g = graph_of(mask)
    src, dest = g.grid.node_id(2, 3), g.grid.node_id(0, 0)
    res = pg.best_paths(g, src, True)
    oracle = enumerate_all_simple_paths(g, src, dest, angular=True)
    assert res.v[dest] == pytest.approx(5622.04, abs=0.01)
    assert oracle.best_value == pytest.approx(7496.42, abs=0.01)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_plain_search_matches_textbook_dijkstra(seed):
    rng = np.random.default_rng(seed)
    g = pg.build_graph(random_mask_grid(rng, max_side=15, density=0.35))
    active = g.grid.active_ids
    src = int(active[rng.integers(len(active))])
    res = pg.best_paths(g, src, False)
    ref = textbook_dijkstra(g, src)
    reached = np.flatnonzero(np.isfinite(res.dist))
    assert set(reached.tolist()) == set(ref)
    for n, d in ref.items():
        assert res.dist[n] == pytest.approx(d, rel=1e-9, abs=0)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled kernel not built")
@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.booleans(), st.sampled_from([10000.0, 3.0, 0.5]))
def test_backends_bit_identical(seed, angular, v_init):
    g = pg.build_graph(random_mask_grid(np.random.default_rng(seed), max_side=20, density=0.4))
    src = int(g.grid.active_ids[0])
    a = pg.best_paths(g, src, angular, v_init, backend="python")
    b = pg.best_paths(g, src, angular, v_init, backend="compiled")
    for x, y in ((a.dist, b.dist), (a.prev, b.prev), (a.v, b.v)):
        assert np.array_equal(x, y)
    assert a.rescales == b.rescales


def test_unknown_backend():
    with pytest.raises(ValueError):
        pg.best_paths(empty_graph(2, 2), 0, False, backend="fortran")


# -- rescaling -------------------------------------------------------------------


@pytest.mark.parametrize("backend", BACKENDS)
def test_rescaling_keeps_plain_distances(backend):
    g = pg.build_graph(build_grid(Environment(30, 20, [[(10, 5), (20, 5), (20, 15), (10, 15)]])))
    big = pg.best_paths(g, 0, False, backend=backend)
    small = pg.best_paths(g, 0, False, v_init=2.0, backend=backend)
    assert big.rescales == 0 and small.rescales > 0
    np.testing.assert_allclose(small.dist, big.dist, rtol=1e-12)


@pytest.mark.parametrize("backend", BACKENDS)
def test_rescale_cap(backend):
    g = empty_graph(12, 12)
    with pytest.raises(pg.RescaleDivergence, match="rescale divergence"):
        pg.best_paths(g, 0, True, v_init=0.5, max_rescales=3, backend=backend)


@given(st.lists(st.one_of(st.just(-math.inf), st.floats(-1e6, 1e6)), min_size=1, max_size=30),
       st.floats(0.01, 1e5))
def test_rescale_preserves_order(values, amount):
    v = list(values)
    _pure.rescale(v, amount)
    for a, b, c, d in zip(values, v, values[1:], v[1:]):
        if a < c:
            assert b <= d
    assert all((x == -math.inf) == (y == -math.inf) for x, y in zip(values, v))


# -- distance fields ----------------------------------------------------------


def test_field_on_empty_cell_is_octile():
    grid = build_grid(Environment(20, 14))
    g = pg.build_graph(grid)
    cands = candidate_locations(grid)
    for model in pg.MODELS:
        f = pg.distance_field(g, cands, model)
        assert f.reachable[:, :, :11].all()
        for t, ids in enumerate(cands):
            for l, n in enumerate(ids):
                d = grid.xy - grid.xy[n]
                expect = [octile(dx, dy) for dx, dy in d]
                np.testing.assert_allclose(f.values[:, t, l], expect, rtol=1e-12)


def test_field_has_no_entries_for_pruned_pocket():
    from test_environment import RING, POCKET

    grid = build_grid(Environment(60, 60, [[(x - 20, y - 20) for x, y in p] for p in RING]))
    g = pg.build_graph(grid)
    f = pg.distance_field(g, candidate_locations(grid), "shortest_path")
    act = grid.active
    assert f.reachable[act][:, :, :11].all()
    for c, r in POCKET:
        assert not f.reachable[grid.node_id(c - 20, r - 20)].any()


def test_field_runs_one_search_per_candidate(monkeypatch):
    grid = build_grid(Environment(100, 100))
    g = pg.build_graph(grid)
    calls = []
    real = pg.best_paths

    def counting(*args, **kw):
        calls.append(args[1])
        return real(*args, **kw)

    monkeypatch.setattr(pg, "best_paths", counting)
    f = pg.distance_field(g, candidate_locations(grid), "shortest_path")
    # corners are shared between two arrays and searched once
    assert f.values.shape == (grid.n_nodes, 4, 11)
    assert len(calls) == 40 and len(set(calls)) == 40


def test_field_rejects_bad_inputs():
    g = empty_graph(4, 4)
    with pytest.raises(ValueError):
        pg.distance_field(g, [[0]], "euclidean")
    with pytest.raises(ValueError):
        pg.distance_field(g, [[5]], "shortest_path")


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_detour_dominance(seed):
    grid = random_mask_grid(np.random.default_rng(seed), max_side=12, density=0.3)
    edge_ids = [int(n) for n in grid.active_ids if grid.edge[n]]
    if not edge_ids:
        return
    cands = [edge_ids[:3]]
    g = pg.build_graph(grid)
    eu = euclidean_distance_field(grid, cands)
    sp = pg.distance_field(g, cands, "shortest_path")
    an = pg.distance_field(g, cands, "shortest_path_angular")
    m = sp.reachable
    assert np.array_equal(m, an.reachable)
    assert np.all(eu.values[m] <= sp.values[m] * (1 + 1e-12))
    assert np.all(sp.values[m] <= an.values[m] * (1 + 1e-12))
