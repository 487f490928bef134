import numpy as np
import pytest

from arrayplace.environment import Environment, build_grid, grid_from_mask, prune_enclosed
from arrayplace.propagation import RadioConfig


def random_mask_grid(rng, max_side=5, density=0.3):
    """Pruned grid on a random lattice of at most ``max_side`` per side with
    randomly blocked nodes; retried until some node stays active."""
    while True:
        ncols = int(rng.integers(2, max_side + 1))
        nrows = int(rng.integers(2, max_side + 1))
        mask = rng.random((nrows, ncols)) < rng.uniform(0.0, density)
        try:
            grid = prune_enclosed(grid_from_mask(mask))
        except ValueError:
            continue
        if grid.active.sum() >= 2:
            return grid


def central_building_env():
    return Environment(100, 100, [[(30, 30), (70, 30), (70, 70), (30, 70)]])


def l_shaped_env():
    return Environment(60, 60, [[(15, 15), (45, 15), (45, 25), (25, 25), (25, 45), (15, 45)]])


def two_block_env():
    return Environment(
        80, 60, [[(10, 10), (30, 10), (30, 40), (10, 40)], [(45, 25), (70, 25), (70, 35), (45, 35)]]
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def radio():
    return RadioConfig()


@pytest.fixture
def small_grid():
    return build_grid(Environment(10, 10, [[(3, 3), (6, 3), (6, 6), (3, 6)]]))


def random_instance(rng, sizes=(2, 2, 2, 2), n_users=10, coverage=1.0, p_unreachable=0.1,
                    n_nodes=None, spread=4.0):
    """ProblemInstance with log-uniform random gains over ``spread`` decades."""
    from arrayplace.optimizer import ProblemInstance
    from arrayplace.propagation import make_gain_matrix

    n_nodes = n_nodes or n_users + 5
    shape = (n_nodes, len(sizes), max(sizes))
    beta = 10.0 ** rng.uniform(-12, -12 + spread, size=shape)
    reach = rng.random(shape) >= p_unreachable
    users = rng.choice(n_nodes, size=n_users, replace=False)
    cands = [list(range(s)) for s in sizes]
    return ProblemInstance(make_gain_matrix(beta, reach, "random"), users, cands, coverage, 10 ** -12.4)
