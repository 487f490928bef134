"""Command-line front end.

    arrayplace plan --env cell.json --out results/ --evaluator shortest_path_angular
    arrayplace plan --spec experiment.json
    arrayplace distances --env cell.json --models shortest_path --out d_sp
    arrayplace export-mip --env cell.json --model euclidean --coverage 0.96 --out model.lp
    arrayplace evaluate --env cell.json --gains results/gains_euclidean.csv --placement 3,3,7,7
    arrayplace summarize cellA/comparison.csv cellB/comparison.csv --out summary.csv
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from . import tables
from .environment import DEFAULT_RATIOS, InvalidEnvironment, load_environment
from .optimizer import DEFAULT_LEVELS, InfeasiblePlacement, evaluate_placement, export_mip
from .propagation import MODELS, MalformedChannelDump, RadioConfig, aggregate_channel_gains
from .report import (
    CellModels,
    ExperimentError,
    ExperimentSpec,
    load_experiment_spec,
    read_comparison,
    run_experiment,
    summarize,
    write_summary,
)

log = logging.getLogger("arrayplace")


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _models(text: str) -> tuple[str, ...]:
    models = tuple(m.strip() for m in text.split(",") if m.strip())
    bad = [m for m in models if m not in MODELS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown model(s) {bad}; choose from {', '.join(MODELS)}")
    return models


def _add_radio(p: argparse.ArgumentParser):
    p.add_argument("--frequency", type=float, default=3.5e9, help="carrier frequency in Hz")
    p.add_argument("--antennas", type=int, default=16, help="antennas per array")
    p.add_argument("--pr-dbm", type=float, default=-94.0, help="minimum received power (dBm)")
    p.add_argument("--d-min", type=float, default=None, help="distance clamp in m (default: grid spacing)")


def _add_cell(p: argparse.ArgumentParser):
    p.add_argument("--env", required=True, type=Path, help="environment JSON file")
    p.add_argument("--ratios", type=_floats, default=DEFAULT_RATIOS,
                   help="candidate positions as fractions of each edge")
    _add_radio(p)


def _radio(args, env) -> RadioConfig:
    d_min = args.d_min if args.d_min is not None else env.grid_spacing
    return RadioConfig(args.frequency, args.antennas, args.pr_dbm, d_min)


def _cell(args) -> CellModels:
    env = load_environment(args.env)
    return CellModels.from_environment(env, _radio(args, env), args.ratios)


def cmd_plan(args) -> int:
    if args.spec is not None:
        spec = load_experiment_spec(args.spec)
        if args.out is not None:
            spec = dataclasses.replace(spec, output=args.out)
    else:
        if args.env is None:
            raise ExperimentError("plan needs --env or --spec")
        env = load_environment(args.env)
        spec = ExperimentSpec(
            environment=args.env,
            models=args.models,
            levels=args.levels,
            radio=_radio(args, env),
            ratios=args.ratios,
            output=args.out or Path("results"),
            evaluator=args.evaluator,
            subcarriers=args.subcarriers,
        )
    result = run_experiment(spec, write_tables=not args.no_tables)
    for model, sols in result.solutions.items():
        for sol in sols:
            print(f"{model:24s} V_S={sol.coverage:<5g} placement={sol.placement} p_T={sol.p_T_dbm:.2f} dBm")
    for row in result.comparison:
        sav = " ".join(f"{m}={s:+.2f}dB" for m, s in row.saving_db.items())
        print(f"V_S={row.coverage:<5g} saving vs euclidean: {sav}")
    print(f"wrote {len(result.files)} files to {spec.output}")
    return 0


def cmd_distances(args) -> int:
    cell = _cell(args)
    out = Path(args.out)
    for model in args.models:
        stem = out.parent / f"{out.name}_{model}" if len(args.models) > 1 else out
        tables.write_distance_table(
            cell.distances(model), cell.grid.active_ids,
            stem.with_suffix(".csv"), stem.with_suffix(".bin"),
        )
        print(f"{model}: {stem.with_suffix('.csv')} and {stem.with_suffix('.bin')}")
    return 0


def cmd_export_mip(args) -> int:
    cell = _cell(args)
    inst = cell.instance(cell.gain(args.model), args.coverage)
    path = export_mip(inst, args.out)
    print(f"wrote {path} ({len(inst.users)} users, {sum(map(len, inst.candidates))} candidates)")
    return 0


def cmd_evaluate(args) -> int:
    cell = _cell(args)
    shape = (cell.grid.n_nodes, len(cell.candidates), cell.lmax)
    if args.subcarriers is not None:
        gain = aggregate_channel_gains(args.gains, args.subcarriers, args.antennas, shape)
    else:
        gain = tables.read_gain_table(args.gains, shape)
    placement = tuple(int(x) for x in args.placement.split(","))
    for v in args.levels:
        try:
            sol = evaluate_placement(cell.instance(gain, v), placement)
        except InfeasiblePlacement as exc:
            print(f"V_S={v:<5g} infeasible: {exc}")
            continue
        print(f"V_S={v:<5g} p_T={sol.p_T_dbm:.2f} dBm covered={len(sol.covered)}/{len(cell.users)}")
    return 0


def cmd_summarize(args) -> int:
    rows = [r for path in args.inputs for r in read_comparison(path)]
    summary = summarize(rows)
    write_summary(args.out, summary)
    for s in summary:
        print(f"V_S={s['V_S']:<5g} {s['model']:24s} mean={s['mean']:+.2f} median={s['p50']:+.2f} dB (n={s['n']})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="arrayplace", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="run the full placement pipeline")
    p.add_argument("--spec", type=Path, help="experiment JSON file (overrides other flags)")
    p.add_argument("--env", type=Path, help="environment JSON file")
    p.add_argument("--models", type=_models, default=MODELS)
    p.add_argument("--levels", type=_floats, default=DEFAULT_LEVELS, help="coverage levels V_S")
    p.add_argument("--ratios", type=_floats, default=DEFAULT_RATIOS)
    p.add_argument("--out", type=Path, default=None, help="output directory")
    p.add_argument("--evaluator", default=None,
                   help="model name or channel-dump CSV used to re-evaluate all placements")
    p.add_argument("--subcarriers", type=int, default=None, help="subcarrier count of a channel dump")
    p.add_argument("--no-tables", action="store_true", help="skip per-model distance/gain tables")
    _add_radio(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("distances", help="write distance tables")
    _add_cell(p)
    p.add_argument("--models", type=_models, default=("shortest_path",))
    p.add_argument("--out", required=True, type=Path, help="output stem (.csv and .bin are added)")
    p.set_defaults(func=cmd_distances)

    p = sub.add_parser("export-mip", help="write the placement model in LP format")
    _add_cell(p)
    p.add_argument("--model", choices=MODELS, default="shortest_path")
    p.add_argument("--coverage", type=float, default=1.0)
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(func=cmd_export_mip)

    p = sub.add_parser("evaluate", help="power needed by a placement under a gain file")
    _add_cell(p)
    p.add_argument("--gains", required=True, type=Path, help="gain table (.csv/.bin) or channel dump")
    p.add_argument("--subcarriers", type=int, default=None,
                   help="treat --gains as a channel dump with this many subcarriers")
    p.add_argument("--placement", required=True, help="candidate ids per array, e.g. 3,3,7,7")
    p.add_argument("--levels", type=_floats, default=(1.0,))
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("summarize", help="percentile table over comparison files")
    p.add_argument("inputs", nargs="+", type=Path)
    p.add_argument("--out", type=Path, default=Path("summary.csv"))
    p.set_defaults(func=cmd_summarize)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InvalidEnvironment, ExperimentError, MalformedChannelDump, InfeasiblePlacement,
            ValueError, OSError) as exc:
        print(f"arrayplace: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
