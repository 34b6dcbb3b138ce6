"""Command-line entry point: ``cqa <subcommand> ...``.

Exit codes: 0 on success, 1 when a run or input file fails, 2 on bad usage.
"""

from __future__ import annotations

import argparse
import sys

from . import harness
from .dynamics import DEFAULT_DT, DEFAULT_SAMPLES, SCHEDULE_KINDS, Schedule
from .errors import CQAError
from .graph import coloring_oracle, fig5b_style_graph, parse_edge_list, random_regular, write_edge_list
from .hilbert import DRIVER_KINDS, DriverSpec, build_problem_diagonal
from .spectral import DEFAULT_GRID_POINTS, default_grid, gap_curve

BUILTIN_GRAPHS = {"fig5b": fig5b_style_graph}


def _load_graph(source: str):
    if source in BUILTIN_GRAPHS:
        return BUILTIN_GRAPHS[source]()
    with open(source) as fh:
        return parse_edge_list(fh.read())


def _emit(text: str, path: str | None):
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _tau_grid(text: str) -> tuple[float, ...]:
    # "lo:hi:per_decade" or an explicit comma-separated list
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError("tau grid range must be lo:hi:per_decade")
        try:
            return harness.tau_grid(float(parts[0]), float(parts[1]), int(parts[2]))
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    return _float_list(text)


def _kinds(allowed):
    def parse(text):
        kinds = tuple(k.strip().lower() for k in text.split(",") if k.strip())
        bad = [k for k in kinds if k not in allowed]
        if bad or not kinds:
            raise argparse.ArgumentTypeError(f"choose from {', '.join(allowed)} (comma-separated)")
        return kinds

    return parse


def _graph_arg(p):
    p.add_argument("graph", help="edge-list file, or 'fig5b' for the built-in six-node graph with 24 colorings")


def _run_args(p, schedule_default="linear", tau_default=20.0):
    p.add_argument("-q", type=int, default=4, help="number of colors (default 4)")
    p.add_argument("--driver", choices=DRIVER_KINDS, default="fc", help="driver type (default fc)")
    p.add_argument("--schedule", choices=SCHEDULE_KINDS, default=schedule_default,
                   help=f"annealing schedule (default {schedule_default})")
    p.add_argument("--tau", type=float, default=tau_default, help=f"annealing time constant (default {tau_default})")
    p.add_argument("--dt", type=float, default=DEFAULT_DT, help=f"RK4 step bound (default {DEFAULT_DT})")
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES,
                   help=f"recorded intervals along the anneal (default {DEFAULT_SAMPLES})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cqa", description="Constrained quantum annealing of graph coloring.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-graph", help="sample a random regular graph as an edge list")
    p.add_argument("-n", type=int, default=6, help="number of nodes (default 6)")
    p.add_argument("-c", type=int, default=3, help="degree (default 3)")
    p.add_argument("--seed", type=int, default=0, help="generator seed (default 0)")
    p.add_argument("-o", help="output file (default stdout)")

    p = sub.add_parser("oracle", help="brute-force coloring count and classical ground energy")
    _graph_arg(p)
    p.add_argument("-q", type=int, default=4, help="number of colors (default 4)")

    p = sub.add_parser("anneal", help="single anneal; prints E_res and P_suc")
    _graph_arg(p)
    _run_args(p, tau_default=100.0)

    p = sub.add_parser("sweep", help="ensemble sweep over realizations and tau; writes the per-cell CSV")
    p.add_argument("-n", type=int, default=6, help="number of nodes (default 6)")
    p.add_argument("-c", type=int, default=3, help="degree (default 3)")
    p.add_argument("-q", type=int, default=4, help="number of colors (default 4)")
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p.add_argument("--driver", type=_kinds(DRIVER_KINDS), default=DRIVER_KINDS,
                   help="drivers, comma-separated (default nn,fc)")
    p.add_argument("--schedule", type=_kinds(SCHEDULE_KINDS), default=("linear",),
                   help="schedules, comma-separated (default linear)")
    p.add_argument("--tau-grid", type=_tau_grid, default=None,
                   help="comma list or lo:hi:per_decade (default 16 per decade over "
                        "[0.5, 200] linear, [0.05, 20] exp)")
    p.add_argument("--realizations", type=int, default=100, help="number of graphs (default 100)")
    p.add_argument("--dt", type=float, default=DEFAULT_DT, help=f"RK4 step bound (default {DEFAULT_DT})")
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES,
                   help=f"recorded intervals per anneal (default {DEFAULT_SAMPLES})")
    p.add_argument("-o", help="per-cell CSV (default stdout)")
    p.add_argument("--aggregate", help="also write realization means to this CSV")

    p = sub.add_parser("gap", help="two lowest eigenvalues of H(s) on a uniform s grid")
    _graph_arg(p)
    p.add_argument("-q", type=int, default=4, help="number of colors (default 4)")
    p.add_argument("--driver", choices=DRIVER_KINDS, default="fc", help="driver type (default fc)")
    p.add_argument("--points", type=int, default=DEFAULT_GRID_POINTS,
                   help=f"grid points on [0, 1] (default {DEFAULT_GRID_POINTS})")
    p.add_argument("-o", help="output CSV (default stdout)")

    for name, text in (
        ("trajectory", "anneal recording t, s, E_ir, f_g and norm"),
        ("populations", "population distributions over the lowest levels at chosen s values"),
    ):
        p = sub.add_parser(name, help=text)
        _graph_arg(p)
        _run_args(p)
        p.add_argument("--snapshots", type=_float_list, default=harness.DEFAULT_SNAPSHOTS,
                       help="schedule values for population tables (default 0.8,0.9,1.0)")
        p.add_argument("--levels", type=int, default=10, help="levels per population table (default 10)")
        p.add_argument("-o", help="output CSV (default stdout)")
    return parser


def _dispatch(args) -> int:
    if args.command == "gen-graph":
        _emit(write_edge_list(random_regular(args.n, args.c, args.seed)), args.o)
        return 0

    if args.command == "oracle":
        res = coloring_oracle(_load_graph(args.graph), args.q)
        print(f"proper_colorings {res.proper_coloring_count}")
        print(f"E0 {res.min_classical_energy}")
        print(f"ground_degeneracy {res.ground_degeneracy}")
        print(f"colorable {str(res.colorable).lower()}")
        return 0

    if args.command == "anneal":
        out = harness.anneal(_load_graph(args.graph), args.q, args.driver, args.schedule, args.tau, args.dt,
                             args.samples)
        print(f"E_res {out.residual_energy!r}")
        print(f"P_suc {out.success_probability!r}")
        return 0

    if args.command == "sweep":
        cfg = harness.ExperimentConfig(
            args.n, args.c, args.q, args.driver, args.schedule, args.tau_grid, args.realizations, args.seed,
            args.dt, args.samples,
        )
        result = harness.run_sweep(cfg)
        _emit(harness.sweep_csv(result.cells), args.o)
        if args.aggregate:
            _emit(harness.aggregate_csv(result.aggregate), args.aggregate)
        for cell in result.failures:
            print(f"cell graph={cell.graph_id} {cell.driver}/{cell.schedule} tau={cell.tau!r} failed: {cell.error}",
                  file=sys.stderr)
        return 1 if result.failures else 0

    if args.command == "gap":
        g = _load_graph(args.graph)
        d = DriverSpec.make(args.driver, args.q)
        _emit(harness.gap_csv(gap_curve(build_problem_diagonal(g, args.q), args.q, d, default_grid(args.points))),
              args.o)
        return 0

    # trajectory / populations
    g = _load_graph(args.graph)
    snaps = args.snapshots if args.command == "populations" else ()
    traj, tables = harness.run_trajectory(g, args.q, args.driver, Schedule(args.schedule, args.tau), args.dt,
                                          args.samples, snaps, args.levels)
    if args.command == "trajectory":
        _emit(harness.trajectory_csv(traj), args.o)
    else:
        _emit(harness.populations_csv(tables), args.o)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except (CQAError, ValueError, OSError) as exc:
        print(f"cqa {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
