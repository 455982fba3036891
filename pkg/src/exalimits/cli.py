"""Command-line front end: analyze, predict, simulate, figures, limits.

Every flag can also be given in a ``--config`` file as ``key = value`` with
the flag's long name (dashes or underscores); flags on the command line win.
"""

from __future__ import annotations

import argparse
import contextlib
import io
import sys
from typing import List, Optional

from . import __version__
from .amdahl import AmdahlError
from .contributions import (
    PROFILES,
    BenchmarkProfile,
    MachineParams,
    find_breakdown,
    limits,
    rmax_curve,
)
from .ingest import K_COLUMNS, IngestError, load_fixture, read_records, unit_scale, write_records
from .report import (
    DEFAULT_LEVELS,
    ReportError,
    gain_timeline,
    hillside,
    plot_script,
    scatter_with_bands,
    write_gain_timeline,
    write_hillside,
    write_scatter,
)
from .timeline import POLICIES, TimelineError, compare_with_analytic, load_scenario, parse_key_values, simulate
from .timeline import format_result



def warn(msg: str, *args) -> None:
    """Diagnostics go to the error stream, never mixed with data."""
    print("exalimits: " + (msg % args if args else msg), file=sys.stderr)

EXIT_OK, EXIT_ERROR, EXIT_USAGE, EXIT_NO_DATA = 0, 1, 2, 3


class NoData(Exception):
    pass


def _optional_float(text: str) -> Optional[float]:
    return None if str(text).strip().lower() in ("none", "") else float(text)


def _on_off(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("on", "true", "yes", "1"):
        return True
    if t in ("off", "false", "no", "0"):
        return False
    raise argparse.ArgumentTypeError(f"expected on/off, got {text!r}")


def _levels(text: str) -> List[float]:
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad level list {text!r}") from None


def _add_machine_flags(p: argparse.ArgumentParser) -> None:
    d = MachineParams()
    g = p.add_argument_group("machine parameters")
    g.add_argument("--clock-ghz", type=float, default=d.clock_ghz)
    g.add_argument("--per-core-flops", type=float, default=d.per_core_flops, help="flop/s per processing unit")
    g.add_argument("--total-clocks", type=float, default=d.total_clocks, help="benchmark run length in cycles")
    g.add_argument("--context-switch-cycles", type=float, default=d.context_switch_cycles)
    g.add_argument("--signal-cycles-roundtrip", type=_optional_float, default=d.signal_cycles_roundtrip,
                   help="round-trip floor in cycles, or 'none' for pure time of flight")
    g.add_argument("--cluster-size", type=int, default=d.cluster_size)
    g.add_argument("--distance-m", type=float, default=d.distance_m)
    g.add_argument("--dispatch-cycles", type=float, default=d.dispatch_cycles)
    g.add_argument("--addressing", type=_on_off, default=d.addressing, help="on|off")


def _machine(args) -> MachineParams:
    return MachineParams(**{name: getattr(args, name) for name in MachineParams.field_names()})


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="exalimits", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file; command-line flags win")
    common.add_argument("--output", "-o", help="output file (default: standard output)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common], help="derive efficiency, 1-alpha and gain per row")
    p.add_argument("--input", required=True)
    p.add_argument("--k-column", choices=K_COLUMNS, default="cores")
    p.add_argument("--unit", help="default unit for rows without one (Tflop/s)")

    p = sub.add_parser("predict", parents=[common], help="RMax over virtual RPeak, with breakdown point")
    p.add_argument("--profile", choices=sorted(PROFILES) + ["custom"], default="hpl")
    p.add_argument("--sw", type=float, help="software serial fraction (custom profile)")
    p.add_argument("--rpeak-min", type=float, default=0.001)
    p.add_argument("--rpeak-max", type=float, default=1.1)
    p.add_argument("--rpeak-unit", default="Eflop/s")
    p.add_argument("--samples", type=int, default=501)
    _add_machine_flags(p)

    p = sub.add_parser("simulate", parents=[common], help="run a fork/join timeline scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--policy", choices=POLICIES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--compare", action="store_true", help="also report the analytic-model alpha")
    _add_machine_flags(p)

    p = sub.add_parser("figures", parents=[common], help="emit figure datasets")
    p.add_argument("--input", help="measurement table (default: bundled fixture)")
    p.add_argument("--which", choices=("hillside", "gain", "scatter"), required=True)
    p.add_argument("--levels", type=_levels, default=list(DEFAULT_LEVELS))
    p.add_argument("--year", type=int, help="restrict to one year")
    p.add_argument("--k-column", choices=K_COLUMNS, default="cores")
    p.add_argument("--apply-perf-factor", type=_on_off, default=False)
    p.add_argument("--plot-script", help="also write a gnuplot stub here")
    _add_machine_flags(p)

    p = sub.add_parser("limits", parents=[common], help="inherent limits of 1-alpha and implied gains")
    p.add_argument("--n-procs", type=float, default=1e7)
    _add_machine_flags(p)
    # --cluster is the documented short name of --cluster-size here
    p.add_argument("--cluster", type=int, dest="cluster_size", default=argparse.SUPPRESS)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: List[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    with open(args.config, encoding="utf-8") as fh:
        values = parse_key_values(fh.read(), args.config)
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in subparser._actions}
    unknown = sorted(set(values) - known - {"config"})
    if unknown:
        parser.error(f"{args.config}: unknown config keys: {', '.join(unknown)}")
    values.pop("config", None)
    # string defaults go through each option's type conversion on reparse
    subparser.set_defaults(**values)
    return parser.parse_args(argv)


def _fmt(x) -> str:
    return x if isinstance(x, str) else f"{x:.12g}" if isinstance(x, float) else str(x)


def cmd_analyze(args, out) -> int:
    result = read_records(args.input, unit=args.unit)
    for err in result.errors:
        warn("%s: %s", args.input, err)
    if not result.records:
        raise NoData(f"{args.input}: no valid rows")
    for err in write_records(result.records, out, k_column=args.k_column):
        warn("record %s not derived", err)
    return EXIT_OK


def cmd_predict(args, out) -> int:
    params = _machine(args)
    if args.profile == "custom":
        if args.sw is None:
            raise AmdahlError("--profile custom needs --sw")
        profile = BenchmarkProfile("custom", args.sw)
    else:
        profile = PROFILES[args.profile]
        if args.sw is not None:
            profile = BenchmarkProfile(profile.name, args.sw)
    scale = unit_scale(args.rpeak_unit)
    lo, hi = args.rpeak_min * scale, args.rpeak_max * scale
    curve = rmax_curve(params, profile, lo, hi, args.samples)
    n_lo, n_hi = lo / params.per_core_flops, hi / params.per_core_flops
    b = find_breakdown(params, profile, n_hi) if n_hi >= 2 else None
    if b is not None and n_lo < b.n_star < n_hi:
        out.write(f"# breakdown n_star={b.n_star:.8e} rpeak_star={b.rpeak_star:.8e} rmax_star={b.rmax_star:.8e}\n")
    else:
        out.write("# no breakdown in range\n")
    out.write("n_procs,rpeak,rmax,one_minus_alpha\n")
    for pt in curve:
        out.write(f"{pt.n_procs:.8e},{pt.rpeak:.8e},{pt.rmax:.8e},{pt.one_minus_alpha:.8e}\n")
    return EXIT_OK


def cmd_simulate(args, out) -> int:
    with open(args.scenario, encoding="utf-8") as fh:
        text = fh.read()
    overrides = {"seed": str(args.seed)}
    if args.policy:
        overrides["policy"] = args.policy
    config = load_scenario(text, args.scenario, **overrides)
    result = simulate(config)
    out.write(format_result(result))
    if args.compare:
        c = compare_with_analytic(config, _machine(args))
        out.write(f"alpha_model={c.alpha_model:.9e}\n")
        out.write(f"one_minus_alpha_model={c.one_minus_alpha_model:.9e}\n")
        out.write(f"relative_gap={c.relative_gap:.9e}\n")
    return EXIT_OK


def cmd_figures(args, out) -> int:
    if args.input:
        result = read_records(args.input)
        for err in result.errors:
            warn("%s: %s", args.input, err)
        records = result.records
    else:
        records = load_fixture()
    if args.year is not None:
        records = [r for r in records if r.year == args.year]
    if not records:
        raise NoData("no records to plot")
    if args.which == "hillside":
        write_hillside(hillside(records, k_column=args.k_column), out)
    elif args.which == "gain":
        timeline = gain_timeline(records, k_column=args.k_column)
        for notice in timeline.notices:
            warn("%s", notice)
        write_gain_timeline(timeline, out)
    else:
        data = scatter_with_bands(records, args.levels, _machine(args), k_column=args.k_column,
                                  apply_perf_factor=args.apply_perf_factor)
        write_scatter(data, out)
    if args.plot_script:
        with open(args.plot_script, "w", encoding="utf-8") as fh:
            fh.write(plot_script(args.which, args.output or "data.csv"))
    return EXIT_OK


def cmd_limits(args, out) -> int:
    params = _machine(args)
    rep = limits(params, args.n_procs)
    rows = [
        ("floor", rep.floor, "one clock each for fork and join"),
        ("pd", rep.propagation, "signal propagation round trip"),
        ("os", rep.os, f"context switch + addressing at n_procs={rep.n_procs:g}, cluster={rep.cluster_size}"),
        ("gain_floor", rep.gain_floor, "1/floor"),
        ("gain_pd", rep.gain_propagation, "1/pd"),
        ("gain_os", rep.gain_os, "1/os"),
        ("gain_os_pd", rep.gain_os_propagation, "1/(os + pd)"),
    ]
    for key, value, note in rows:
        out.write(f"{key}={_fmt(value if isinstance(value, float) else str(value))}  # {note}\n")
    return EXIT_OK


COMMANDS = {
    "analyze": cmd_analyze,
    "predict": cmd_predict,
    "simulate": cmd_simulate,
    "figures": cmd_figures,
    "limits": cmd_limits,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, list(sys.argv[1:] if argv is None else argv))
    except OSError as exc:
        warn("%s", exc)
        return EXIT_ERROR
    buf = io.StringIO()
    try:
        code = COMMANDS[args.command](args, buf)
    except NoData as exc:
        warn("%s", exc)
        return EXIT_NO_DATA
    except (AmdahlError, IngestError, ReportError, TimelineError, ValueError, OSError) as exc:
        warn("%s", exc)
        return EXIT_ERROR
    # write only once the artifact is complete
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        with contextlib.suppress(BrokenPipeError):
            sys.stdout.write(buf.getvalue())
    return code


if __name__ == "__main__":
    sys.exit(main())
