"""End-to-end experiment: geometry -> distances -> gains -> per-level optimal
placements, optional re-evaluation under a common ground-truth gain
matrix, and percentile summaries of the resulting power savings."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import pathgraph, tables
from .environment import (
    DEFAULT_RATIOS,
    NodeGrid,
    build_grid,
    candidate_locations,
    load_environment,
    simplify_cell,
)
from .optimizer import (
    DEFAULT_LEVELS,
    InfeasiblePlacement,
    PlacementSolution,
    ProblemInstance,
    evaluate_placement,
    sweep_coverage,
)
from .propagation import (
    MODELS,
    GainMatrix,
    RadioConfig,
    aggregate_channel_gains,
    euclidean_distance_field,
    gains_from_distances,
    watt_to_dbm,
)

log = logging.getLogger(__name__)

BASELINE = "euclidean"


class ExperimentError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentSpec:
    environment: Path
    models: tuple[str, ...] = MODELS
    levels: tuple[float, ...] = DEFAULT_LEVELS
    radio: RadioConfig | None = None
    ratios: tuple[float, ...] = DEFAULT_RATIOS
    output: Path = Path("results")
    evaluator: str | None = None
    subcarriers: int | None = None
    v_init: float = pathgraph.DEFAULT_V_INIT

    def __post_init__(self):
        object.__setattr__(self, "environment", Path(self.environment))
        object.__setattr__(self, "output", Path(self.output))
        object.__setattr__(self, "models", tuple(self.models))
        object.__setattr__(self, "levels", tuple(float(v) for v in self.levels))
        object.__setattr__(self, "ratios", tuple(float(r) for r in self.ratios))
        if not self.models:
            raise ExperimentError("at least one model is required")
        unknown = [m for m in self.models if m not in MODELS]
        if unknown:
            raise ExperimentError(f"unknown model(s) {unknown}; choose from {list(MODELS)}")
        if len(set(self.models)) != len(self.models):
            raise ExperimentError("models listed twice")
        if not self.levels or any(not 0 < v <= 1 for v in self.levels):
            raise ExperimentError("coverage levels must lie in (0, 1]")
        if self.evaluator is not None and self.evaluator not in MODELS:
            if self.subcarriers is None:
                raise ExperimentError("a channel-dump evaluator needs the subcarrier count")


def spec_from_dict(data: dict, base: Path | None = None) -> ExperimentSpec:
    """Build a spec from the JSON experiment-file keys; relative paths are
    resolved against ``base``."""
    base = Path(base) if base is not None else Path(".")
    known = {"environment", "models", "levels", "radio", "ratios", "output",
             "evaluator", "subcarriers", "v_init"}
    extra = set(data) - known
    if extra:
        raise ExperimentError(f"unknown experiment keys {sorted(extra)}")
    if "environment" not in data:
        raise ExperimentError("experiment file needs an 'environment' path")
    kw = {"environment": base / data["environment"]}
    for key in ("models", "levels", "ratios", "subcarriers", "v_init"):
        if key in data:
            kw[key] = data[key]
    if "output" in data:
        kw["output"] = base / data["output"]
    if data.get("evaluator") is not None:
        ev = str(data["evaluator"])
        kw["evaluator"] = ev if ev in MODELS else str(base / ev)
    if "radio" in data:
        kw["radio"] = RadioConfig(**data["radio"])
    return ExperimentSpec(**kw)


def load_experiment_spec(path) -> ExperimentSpec:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ExperimentError(f"cannot parse experiment file {path}: {exc}") from exc
    return spec_from_dict(data, base=path.parent)


@dataclass
class CellModels:
    """Geometry of one cell plus lazily-computed per-model fields and gains."""

    grid: NodeGrid
    users: np.ndarray
    candidates: list[list[int]]
    radio: RadioConfig
    v_init: float = pathgraph.DEFAULT_V_INIT
    fields: dict = field(default_factory=dict)
    gains: dict = field(default_factory=dict)
    _graph: pathgraph.Graph | None = None

    @classmethod
    def from_environment(cls, env, radio=None, ratios=DEFAULT_RATIOS, v_init=pathgraph.DEFAULT_V_INIT):
        grid = build_grid(env)
        if radio is None:
            radio = RadioConfig(d_min=env.grid_spacing)
        return cls(grid, simplify_cell(grid), candidate_locations(grid, ratios), radio, v_init)

    @property
    def graph(self) -> pathgraph.Graph:
        if self._graph is None:
            self._graph = pathgraph.build_graph(self.grid)
        return self._graph

    def distances(self, model: str):
        if model not in self.fields:
            if model == "euclidean":
                f = euclidean_distance_field(self.grid, self.candidates)
            else:
                f = pathgraph.distance_field(self.graph, self.candidates, model, self.v_init)
            self.fields[model] = f
        return self.fields[model]

    def gain(self, model: str) -> GainMatrix:
        if model not in self.gains:
            self.gains[model] = gains_from_distances(self.distances(model), self.radio)
        return self.gains[model]

    def instance(self, gain: GainMatrix, coverage: float = 1.0) -> ProblemInstance:
        return ProblemInstance(gain, self.users, self.candidates, coverage, self.radio.p_r)

    @property
    def lmax(self) -> int:
        return max(len(c) for c in self.candidates)


@dataclass(frozen=True)
class ComparisonRow:
    coverage: float
    p_T_dbm: dict
    saving_db: dict


def comparison_rows(levels, evaluated: dict) -> list[ComparisonRow]:
    """``evaluated[model][k]`` is the evaluator-side power (watts) of the
    model's placement at level k.  Savings are relative to the Euclidean
    placement, positive when the model needs less power."""
    rows = []
    for k, v in enumerate(levels):
        dbm = {m: float(watt_to_dbm(p[k])) for m, p in evaluated.items()}
        saving = {}
        if BASELINE in dbm:
            saving = {m: dbm[BASELINE] - x for m, x in dbm.items() if m != BASELINE}
        rows.append(ComparisonRow(coverage=v, p_T_dbm=dbm, saving_db=saving))
    return rows


def nearest_rank(sorted_values, pct: float) -> float:
    n = len(sorted_values)
    rank = max(1, math.ceil(pct / 100.0 * n - 1e-12))
    return sorted_values[min(rank, n) - 1]


SUMMARY_STATS = ("min", "p25", "p50", "p75", "max", "mean")


def summarize(rows) -> list[dict]:
    """Per coverage level and model: min, nearest-rank quartiles, max and
    mean of the saving across the given rows (one row per cell and level)."""
    rows = list(rows)
    if not rows:
        raise ValueError("nothing to summarize")
    groups: dict = {}
    for row in rows:
        for model, s in row.saving_db.items():
            groups.setdefault((row.coverage, model), []).append(s)
    out = []
    for (v, model), vals in sorted(groups.items(), key=lambda kv: (-kv[0][0], kv[0][1])):
        vals = sorted(vals)
        finite = [x for x in vals if math.isfinite(x)]
        out.append({
            "V_S": v,
            "model": model,
            "n": len(vals),
            "min": vals[0],
            "p25": nearest_rank(vals, 25),
            "p50": nearest_rank(vals, 50),
            "p75": nearest_rank(vals, 75),
            "max": vals[-1],
            "mean": sum(finite) / len(finite) if len(finite) == len(vals) else math.nan,
        })
    return out


def _fmt2(x: float) -> str:
    return f"{x:.2f}" if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")


def _level(v: float) -> str:
    return f"{v:g}"


@dataclass
class ExperimentResult:
    solutions: dict
    comparison: list
    summary: list
    files: list


class _Outputs:
    """Tracks written files so a failed run leaves nothing behind."""

    def __init__(self, root: Path):
        self.root = root
        self.files: list[Path] = []

    def path(self, name: str) -> Path:
        p = self.root / name
        self.files.append(p)
        return p

    def discard(self):
        for p in self.files:
            p.unlink(missing_ok=True)


def write_placements(path, cell: CellModels, solutions: dict):
    xy = cell.grid.xy
    n_arrays = len(cell.candidates)
    header = ["model", "V_S"]
    for t in range(n_arrays):
        header += [f"l_{t + 1}_x", f"l_{t + 1}_y"]
    header += ["p_T_dBm", "covered_count"]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for model, sols in solutions.items():
            for sol in sols:
                row = [model, _level(sol.coverage)]
                for node in sol.nodes:
                    row += [f"{xy[node][0]:g}", f"{xy[node][1]:g}"]
                row += [_fmt2(sol.p_T_dbm), len(sol.covered)]
                w.writerow(row)


def placements_records(solutions: dict) -> np.ndarray:
    """Full-precision sidecar rows: (model index in MODELS, V_S, candidate
    ids..., p_T watts, p_T dBm, y)."""
    rows = []
    for model, sols in solutions.items():
        for sol in sols:
            rows.append([MODELS.index(model), sol.coverage, *sol.placement, sol.p_T, sol.p_T_dbm, sol.y])
    return np.array(rows, dtype=np.float64)


def write_comparison(path, rows: list[ComparisonRow], models):
    others = [m for m in models if m != BASELINE] if BASELINE in models else []
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["V_S"] + [f"p_T_dBm_{m}" for m in models] + [f"saving_dB_{m}" for m in others])
        for r in rows:
            w.writerow(
                [_level(r.coverage)]
                + [_fmt2(r.p_T_dbm[m]) for m in models]
                + [_fmt2(r.saving_db[m]) for m in others]
            )


def read_comparison(path) -> list[ComparisonRow]:
    rows = []
    with Path(path).open(newline="") as fh:
        for rec in csv.DictReader(fh):
            dbm = {k[len("p_T_dBm_"):]: float(v) for k, v in rec.items() if k.startswith("p_T_dBm_")}
            sav = {k[len("saving_dB_"):]: float(v) for k, v in rec.items() if k.startswith("saving_dB_")}
            rows.append(ComparisonRow(coverage=float(rec["V_S"]), p_T_dbm=dbm, saving_db=sav))
    return rows


def write_summary(path, summary: list[dict]):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["V_S", "model", "n", *SUMMARY_STATS])
        for s in summary:
            w.writerow([_level(s["V_S"]), s["model"], s["n"], *(_fmt2(s[k]) for k in SUMMARY_STATS)])


def evaluator_gain(cell: CellModels, evaluator: str, subcarriers: int | None) -> GainMatrix:
    if evaluator in MODELS:
        return cell.gain(evaluator)
    return aggregate_channel_gains(
        Path(evaluator),
        n_subcarriers=int(subcarriers),
        n_antennas=cell.radio.antennas_per_array,
        shape=(cell.grid.n_nodes, len(cell.candidates), cell.lmax),
    )


def reevaluate(cell: CellModels, solutions: dict, gain: GainMatrix) -> dict:
    """Evaluator-side power of every chosen placement (inf when the
    placement cannot reach the coverage level under that gain)."""
    out = {}
    for model, sols in solutions.items():
        powers = []
        for sol in sols:
            try:
                powers.append(evaluate_placement(cell.instance(gain, sol.coverage), sol.placement).p_T)
            except InfeasiblePlacement:
                powers.append(math.inf)
        out[model] = powers
    return out


def run_experiment(spec: ExperimentSpec, write_tables: bool = True) -> ExperimentResult:
    env = load_environment(spec.environment)
    radio = spec.radio or RadioConfig(d_min=env.grid_spacing)
    cell = CellModels.from_environment(env, radio, spec.ratios, spec.v_init)
    levels = sorted(spec.levels, reverse=True)
    spec.output.mkdir(parents=True, exist_ok=True)
    out = _Outputs(spec.output)
    try:
        solutions: dict[str, list[PlacementSolution]] = {}
        active = cell.grid.active_ids
        for model in spec.models:
            log.info("model %s: distances and gains", model)
            fld, gain = cell.distances(model), cell.gain(model)
            if write_tables:
                tables.write_distance_table(
                    fld, active, out.path(f"distances_{model}.csv"), out.path(f"distances_{model}.bin")
                )
                tables.write_gain_table(
                    gain, cell.candidates, cell.users,
                    out.path(f"gains_{model}.csv"), out.path(f"gains_{model}.bin"),
                )
            log.info("model %s: sweeping %d coverage levels", model, len(levels))
            solutions[model] = sweep_coverage(cell.instance(gain), levels)
        write_placements(out.path("placements.csv"), cell, solutions)
        tables.write_binary(out.path("placements.bin"), placements_records(solutions))

        comparison, summary = [], []
        if spec.evaluator is not None:
            gain = evaluator_gain(cell, spec.evaluator, spec.subcarriers)
            evaluated = reevaluate(cell, solutions, gain)
            comparison = comparison_rows(levels, evaluated)
            write_comparison(out.path("comparison.csv"), comparison, list(spec.models))
            full = [[r.coverage, *(r.p_T_dbm[m] for m in spec.models)] for r in comparison]
            tables.write_binary(out.path("comparison.bin"), np.array(full, dtype=np.float64))
            if BASELINE in spec.models and len(spec.models) > 1:
                summary = summarize(comparison)
                write_summary(out.path("summary.csv"), summary)
    except BaseException:
        out.discard()
        raise
    return ExperimentResult(solutions=solutions, comparison=comparison, summary=summary, files=out.files)
