"""Environment-aware placement of distributed antenna arrays on the edges of
a rectangular cell."""

from .environment import (
    Environment,
    NodeGrid,
    build_grid,
    candidate_locations,
    load_environment,
    prune_enclosed,
    rasterize,
    simplify_cell,
)
from .optimizer import (
    PlacementSolution,
    ProblemInstance,
    evaluate_placement,
    export_mip,
    solve_by_enumeration,
    sweep_coverage,
)
from .pathgraph import BACKEND, best_paths, build_graph, distance_field
from .propagation import (
    GainMatrix,
    RadioConfig,
    aggregate_channel_gains,
    euclidean_distance_field,
    gains_from_distances,
)
from .report import ExperimentSpec, run_experiment, summarize

__version__ = "0.1.0"
