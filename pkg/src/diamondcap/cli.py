"""Command-line front end: ``diamondcap {rate,sweep,oracle,simulate}``.

Exit status: 0 success, 2 usage error, 3 infeasible problem, 4 numerical
failure, 5 I/O error.

A ``--config FILE`` of ``key = value`` lines (keys are flag names without
the leading dashes, ``#`` starts a comment) is applied before the flags,
so explicit flags win.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import binary_line as bl
from .binning_sim import SimConfig, SimResult, run_sim
from .dm_oracle import DmChannelSpec, brute_force_capacity
from .errors import ConfigError, DomainError, InfeasibleError, SingularityError
from .optimizer import GridConfig
from .sweep import (CURVES, PRESETS, CsvTable, SweepSpec, csv_text, emit_csv, evaluate_curve,
                    grid_range, make_params, presets, run_sweep)

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4, 5

PARAM_FLAGS = ("C1", "C2", "P1", "P2", "PS", "N0", "pz", "px2", "SNR")


class UsageError(Exception):
    pass


def _add_params(p):
    for name in PARAM_FLAGS:
        p.add_argument(f"--{name}", type=float, default=None)


def _add_grid(p):
    p.add_argument("--grid-points", type=int, default=None)
    p.add_argument("--refine-rounds", type=int, default=None)


def build_parser():
    parser = argparse.ArgumentParser(prog="diamondcap", description=__doc__.splitlines()[0])
    parser.add_argument("--config", type=Path, default=None, help="key = value defaults file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rate", help="evaluate one rate at one parameter set")
    p.add_argument("curve", choices=sorted(CURVES))
    _add_params(p)
    p.add_argument("--m", type=int, default=2, help="description alphabet size for R_separate")
    _add_grid(p)

    p = sub.add_parser("sweep", help="run a figure preset or a custom sweep, emit CSV")
    p.add_argument("--preset", choices=PRESETS + ("custom",), default="custom")
    p.add_argument("--var", default=None, help="swept variable (custom)")
    p.add_argument("--start", type=float, default=None)
    p.add_argument("--stop", type=float, default=None)
    p.add_argument("--step", type=float, default=None)
    p.add_argument("--curves", default="", help="comma-separated curve names (custom)")
    p.add_argument("--out", type=Path, default=None, help="output directory; stdout if omitted")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--m", type=int, default=2)
    _add_params(p)
    _add_grid(p)

    p = sub.add_parser("oracle", help="compare the binary capacity with the brute-force oracle")
    p.add_argument("--spec", type=Path, default=None, help="finite-alphabet channel file")
    _add_params(p)
    _add_grid(p)

    p = sub.add_parser("simulate", help="Monte Carlo run of the binning scheme")
    p.add_argument("--n", type=int, default=12)
    p.add_argument("--R2", type=float, default=None, help="message rate (default: half the capacity)")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bin-excess", type=float, default=None)
    p.add_argument("--p0", type=float, default=None)
    p.add_argument("--p1", type=float, default=None)
    _add_params(p)
    return parser, sub


def read_config(path: Path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            out[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return out


def _apply_config(sub, command: str, values: dict):
    p = sub.choices[command]
    actions = {a.dest: a for a in p._actions}
    defaults = {}
    for key, raw in values.items():
        if key not in actions or key == "help":
            raise UsageError(f"unknown config key {key!r} for '{command}'")
        act = actions[key]
        try:
            defaults[key] = act.type(raw) if act.type else raw
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad value for {key!r}: {raw!r}") from exc
        if act.choices is not None and defaults[key] not in act.choices:
            raise UsageError(f"{key!r} must be one of {sorted(act.choices)}")
    p.set_defaults(**defaults)


def _param_values(args) -> dict:
    return {k: getattr(args, k) for k in PARAM_FLAGS if getattr(args, k, None) is not None}


def cmd_rate(args, out):
    curve = CURVES[args.curve]
    params = make_params(curve.family, _param_values(args))
    res = evaluate_curve(args.curve, params, args.m, args.grid_points, args.refine_rounds)
    if isinstance(res, float):
        print(f"{args.curve} = {res:.9g}", file=out)
        return EXIT_OK
    print(f"{args.curve} = {res.value:.9g}", file=out)
    for k, v in res.argmax.items():
        text = np.array2string(np.asarray(v), precision=9) if np.ndim(v) else f"{v:.9g}"
        print(f"  {k} = {text}", file=out)
    if res.active_bound is not None:
        print(f"  active bound = {res.active_bound}", file=out)
    return EXIT_OK


def cmd_sweep(args, out):
    if args.preset == "custom":
        if args.var is None or None in (args.start, args.stop, args.step):
            raise UsageError("custom sweeps need --var, --start, --stop and --step")
        curves = tuple(c for c in args.curves.split(",") if c)
        fixed = {k: v for k, v in _param_values(args).items() if k != args.var}
        specs = [SweepSpec(args.var, grid_range(args.start, args.stop, args.step), fixed, curves,
                           "custom", args.m, args.grid_points, args.refine_rounds)]
    else:
        specs = [SweepSpec(s.variable, s.values, s.fixed, s.curves, s.name, args.m,
                           args.grid_points, args.refine_rounds) for s in presets(args.preset)]
    failed = 0
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
    for spec in specs:
        table, nf = run_sweep(spec, args.jobs)
        failed += nf
        if args.out is None:
            if len(specs) > 1:
                print(f"# {table.name}", file=out)
            out.write(csv_text(table))
        else:
            emit_csv(table, args.out / f"{table.name}.csv")
    if failed:
        print(f"{failed} sweep point(s) failed numerically; marked NaN", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_oracle(args, out):
    cfg = None
    if args.grid_points is not None or args.refine_rounds is not None:
        cfg = GridConfig(args.grid_points or 41, 3 if args.refine_rounds is None else args.refine_rounds)
    if args.spec is not None:
        spec = DmChannelSpec.from_text(args.spec.read_text(encoding="utf-8"))
        res = brute_force_capacity(spec, cfg)
        print(f"oracle = {res.value:.9g}", file=out)
        return EXIT_OK
    params = make_params("binary", _param_values(args))
    closed = bl.capacity_binary(params).value
    brute = brute_force_capacity(bl.to_dm_spec(params), cfg).value
    print(f"closed_form = {closed:.9g}", file=out)
    print(f"oracle = {brute:.9g}", file=out)
    print(f"gap = {abs(closed - brute):.3g}", file=out)
    return EXIT_OK


def cmd_simulate(args, out):
    params = make_params("binary", _param_values(args))
    cap = bl.capacity_binary(params)
    p0 = cap.argmax["p0"] if args.p0 is None else args.p0
    p1 = cap.argmax["p1"] if args.p1 is None else args.p1
    r2 = 0.5 * cap.value if args.R2 is None else args.R2
    cfg = SimConfig(args.n, r2, params, bl.BinaryInputPolicy(p0, p1), args.trials, args.seed, args.bin_excess)
    res = run_sim(cfg)
    table = CsvTable(("n", "R2", "bin_excess") + SimResult.HEADER,
                     [(cfg.n, cfg.R2, cfg.bin_excess) + res.as_row()], "simulate")
    out.write(csv_text(table))
    return EXIT_OK


COMMANDS = {"rate": cmd_rate, "sweep": cmd_sweep, "oracle": cmd_oracle, "simulate": cmd_simulate}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser, sub = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        if args.config is not None:
            _apply_config(sub, args.command, read_config(args.config))
            args = parser.parse_args(argv)
        return COMMANDS[args.command](args, out)
    except (UsageError, ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (SingularityError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
