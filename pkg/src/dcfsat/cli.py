"""Command-line front end: ``dcf {table1,solve,simulate,sweep,validate}``.

Scenario settings come from built-in defaults, then an optional ``--config``
file of ``key = value`` lines (keys as the long flag names), then flags.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .model import BackoffParams, ConvergenceError, DomainError, Scenario
from .records import COLUMNS, PARAM_COLUMNS, analytic_record, render_csv, render_json, sim_record
from .sim import GENERATOR_NAME, SimConfig, simulate
from .sweep import PRESETS, SweepSpec, parse_f, parse_values, preset, run_sweep
from .timing import TABLE1_REFERENCE, TABLE1_TOLERANCE_US, AccessMode, MacTimingParams, channel_times
from .validate import Tolerances, default_grid, parse_point, validate

DEFAULTS = {
    "mode": "basic",
    "n": 10,
    "w0": 8,
    "m": 5,
    "f": "inf",
    "pf": 0.0,
    "rate": 11.0,
    "payload": 2312,
    "format": "csv",
    "delay_normalization": "paper",
    "seed": 1,
    "reps": 10,
    "frames": 100_000,
    "warmup": 1_000,
}
CONVERTERS = {
    "mode": str,
    "n": int,
    "w0": int,
    "m": int,
    "f": str,
    "pf": float,
    "rate": float,
    "payload": int,
    "format": str,
    "delay_normalization": str,
    "seed": int,
    "reps": int,
    "frames": int,
    "warmup": int,
}
SCENARIO_KEYS = ("mode", "n", "w0", "m", "f", "pf", "rate", "payload")
SIM_KEYS = ("seed", "reps", "frames", "warmup")


class CliError(Exception):
    pass


def load_config(path: str | Path) -> dict:
    settings = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().lstrip("-").replace("-", "_")
        if not sep or key not in CONVERTERS:
            raise CliError(f"{path}:{lineno}: unrecognised config line {raw!r}")
        try:
            settings[key] = CONVERTERS[key](value.strip())
        except ValueError as exc:
            raise CliError(f"{path}:{lineno}: {exc}") from None
    return settings


def _add_scenario_args(p: argparse.ArgumentParser, allow_both: bool = False) -> None:
    g = p.add_argument_group("scenario")
    modes = ["basic", "rtscts"] + (["both"] if allow_both else [])
    g.add_argument("--mode", choices=modes, help="access mode (default basic%s)" % (", sweeps: both" if allow_both else ""))
    g.add_argument("--n", type=int, help="number of stations")
    g.add_argument("--w0", type=int, help="initial contention window W")
    g.add_argument("--m", type=int, help="number of window doublings")
    g.add_argument("--f", help="extra retries at the maximum window, or 'inf' to retry until success")
    g.add_argument("--pf", type=float, help="frame error probability per attempt")
    g.add_argument("--rate", type=float, help="data rate in Mb/s")
    g.add_argument("--payload", type=int, help="payload size in octets")
    g.add_argument("--config", help="file of key = value settings; flags override it")
    g.add_argument("--format", choices=["csv", "json"])
    g.add_argument("--out", help="write output to this file instead of stdout")
    g.add_argument("--delay-normalization", choices=["paper", "conditional"],
                   help="'paper': literal weights (1-p)p^i, which sum to 1 - P_D; 'conditional': delay of delivered frames")


def _add_sim_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("simulation")
    g.add_argument("--seed", type=int)
    g.add_argument("--reps", type=int, help="independent replications")
    g.add_argument("--frames", type=int, help="completed frames per replication, warmup included")
    g.add_argument("--warmup", type=int, help="leading completed frames excluded from statistics")
    g.add_argument("--jobs", type=int, default=1, help="worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dcf", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"dcfsat {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("table1", help="channel-busy durations against the published table")
    _add_scenario_args(p)

    p = sub.add_parser("solve", help="analytic evaluation of one scenario")
    _add_scenario_args(p)

    p = sub.add_parser("simulate", help="Monte Carlo estimate of one scenario")
    _add_scenario_args(p)
    _add_sim_args(p)

    p = sub.add_parser("sweep", help="sweep n, pf or f; emits one row per point, mode and source")
    _add_scenario_args(p, allow_both=True)
    _add_sim_args(p)
    p.add_argument("--preset", choices=PRESETS)
    p.add_argument("--axis", choices=["n", "pf", "f"])
    p.add_argument("--values", help="a,b,c | start:stop:step | log:start:stop:count (pf only)")
    p.add_argument("--series", action="append", default=[],
                   help="curve parameter, e.g. pf=0.1,0.5 (repeatable)")
    p.add_argument("--source", choices=["analytic", "sim", "both"], default=None)
    p.add_argument("--outputs", help="comma-separated result columns to keep")

    p = sub.add_parser("validate", help="compare simulation against the analysis")
    _add_scenario_args(p, allow_both=True)
    _add_sim_args(p)
    p.add_argument("--points", action="append", default=[],
                   help="custom point, e.g. n=1:pf=0 (repeatable); default is the full grid")
    p.add_argument("--max-rel-err", type=float, help="throughput tolerance (default 0.05)")
    p.add_argument("--delay-rel-err", type=float, help="delay tolerance (default 0.15)")
    p.add_argument("--report", help="also write the JSON report to this file")
    return parser


def _settings(args: argparse.Namespace, overrides: dict | None = None) -> dict:
    settings = dict(DEFAULTS)
    settings.update(overrides or {})
    if args.config:
        settings.update(load_config(args.config))
    for key in CONVERTERS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    return settings


def _timing(settings: dict) -> MacTimingParams:
    try:
        return MacTimingParams(channel_rate=float(settings["rate"]), payload_octets=int(settings["payload"]))
    except ValueError as exc:
        raise DomainError(str(exc)) from None


def _scenario(settings: dict, mode: str | None = None) -> Scenario:
    mode = mode or settings["mode"]
    if mode == "both":
        raise DomainError("this command takes a single --mode")
    backoff = BackoffParams(w0=int(settings["w0"]), m=int(settings["m"]), f=parse_f(settings["f"]))
    return Scenario(n=int(settings["n"]), p_f=float(settings["pf"]), backoff=backoff,
                    mode=AccessMode.parse(mode), timing=_timing(settings))


def _modes(settings: dict) -> tuple:
    mode = settings["mode"]
    return tuple(AccessMode) if mode == "both" else (AccessMode.parse(mode),)


def _sim_config(settings: dict) -> SimConfig:
    try:
        return SimConfig(seed=int(settings["seed"]), frames_target=int(settings["frames"]),
                         warmup_frames=int(settings["warmup"]), replications=int(settings["reps"]))
    except ValueError as exc:
        raise DomainError(str(exc)) from None


def _echo(settings: dict, keys) -> dict:
    return {k: settings[k] for k in keys}


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _render(records, settings, keys, args, extra=None, columns=COLUMNS) -> None:
    config = _echo(settings, keys)
    if settings["format"] == "json":
        text = render_json(records, config, extra, columns)
    else:
        text = render_csv(records, config, extra, columns)
    _emit(text, args.out)


def cmd_table1(args) -> int:
    settings = _settings(args)
    params = _timing(settings)
    is_default = params == MacTimingParams()
    rows, ok = [], True
    for mode in AccessMode:
        times = channel_times(mode, params)
        row = {"mode": mode.value, "t_s_us": times.t_s, "t_c_us": times.t_c, "t_e_us": times.t_e,
               "payload_airtime_us": times.payload_airtime}
        if is_default:
            for key in ("t_s", "t_c"):
                ref = TABLE1_REFERENCE[(mode, key)]
                passed = abs(getattr(times, key) - ref) <= TABLE1_TOLERANCE_US
                ok &= passed
                row[f"ref_{key}_us"] = ref
                row[f"{key}_check"] = "PASS" if passed else "FAIL"
        rows.append(row)

    if settings["format"] == "json":
        text = json.dumps({"version": __version__, "rate": params.channel_rate,
                           "payload": params.payload_octets, "rows": rows}, indent=2) + "\n"
    else:
        lines = [f"rate {params.channel_rate:g} Mb/s, payload {params.payload_octets} octets"]
        header = f"{'mode':<8}{'T_s (us)':>11}{'T_c (us)':>11}{'T_e (us)':>11}"
        if is_default:
            header += f"{'ref T_s':>10}{'ref T_c':>10}  check"
        lines.append(header)
        for row in rows:
            line = f"{row['mode']:<8}{row['t_s_us']:11.1f}{row['t_c_us']:11.1f}{row['t_e_us']:11.1f}"
            if is_default:
                line += (f"{row['ref_t_s_us']:10.1f}{row['ref_t_c_us']:10.1f}  "
                         f"T_s {row['t_s_check']}, T_c {row['t_c_check']}")
            lines.append(line)
        if not is_default:
            lines.append("(reference values exist only for the default parameters)")
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    return 0 if ok else 1


def cmd_solve(args) -> int:
    settings = _settings(args)
    record = analytic_record(_scenario(settings), conditional=settings["delay_normalization"] == "conditional")
    _render([record], settings, SCENARIO_KEYS + ("delay_normalization",), args)
    return 0


def cmd_simulate(args) -> int:
    settings = _settings(args)
    result = simulate(_scenario(settings), _sim_config(settings), jobs=args.jobs)
    extra = {"generator": GENERATOR_NAME, "seed": settings["seed"]}
    _render([sim_record(result)], settings, SCENARIO_KEYS + SIM_KEYS, args, extra)
    return 0


_AXIS_NAMES = {"n": "n", "pf": "p_f", "f": "f"}


def _sweep_spec(args, settings) -> SweepSpec:
    source = args.source or "analytic"
    sources = ("analytic", "sim") if source == "both" else (source,)
    modes = _modes(settings)
    base = _scenario(settings, mode="basic")
    if args.preset:
        spec = preset(args.preset, base, sources)
        return SweepSpec(spec.axis, spec.values, spec.fixed, spec.series, modes, sources)
    if not (args.axis and args.values):
        raise DomainError("sweep needs --preset or both --axis and --values")
    axis = _AXIS_NAMES[args.axis]
    series = {}
    for item in args.series:
        key, _, values = item.partition("=")
        key = _AXIS_NAMES.get(key.strip())
        if key is None or not values:
            raise DomainError(f"bad --series {item!r}")
        series[key] = parse_values(key, values)
    return SweepSpec(axis, parse_values(axis, args.values), base, series, modes, sources)


def cmd_sweep(args) -> int:
    settings = _settings(args, {"mode": "both"})
    spec = _sweep_spec(args, settings)
    columns = COLUMNS
    if args.outputs:
        wanted = [c.strip() for c in args.outputs.split(",") if c.strip()]
        unknown = [c for c in wanted if c not in COLUMNS]
        if unknown:
            raise DomainError(f"unknown output columns {unknown}")
        columns = PARAM_COLUMNS + tuple(c for c in COLUMNS if c in wanted and c not in PARAM_COLUMNS)
    records = run_sweep(spec, _sim_config(settings),
                        conditional=settings["delay_normalization"] == "conditional", jobs=args.jobs)
    extra = {"sweep": f"{args.preset or 'custom'} axis={spec.axis} sources={','.join(spec.sources)}"}
    if "sim" in spec.sources:
        extra["generator"] = GENERATOR_NAME
    keys = SCENARIO_KEYS + ("delay_normalization",) + (SIM_KEYS if "sim" in spec.sources else ())
    _render(records, settings, keys, args, extra, columns)
    return 0


def cmd_validate(args) -> int:
    settings = _settings(args, {"mode": "both", "frames": 101_000, "f": "10"})
    cfg = _sim_config(settings)
    base = _scenario(settings, mode="basic")
    modes = _modes(settings)
    if args.points:
        scenarios = [sc for text in args.points for sc in parse_point(text, base) if sc.mode in modes]
    else:
        scenarios = [sc for sc in default_grid(base, f=base.backoff.f) if sc.mode in modes]
    tol = Tolerances()
    if args.max_rel_err is not None:
        tol = Tolerances(throughput_rel=args.max_rel_err, delay_rel=tol.delay_rel)
    if args.delay_rel_err is not None:
        tol = Tolerances(throughput_rel=tol.throughput_rel, delay_rel=args.delay_rel_err)
    report = validate(scenarios, cfg, tol, jobs=args.jobs)
    if settings["format"] == "json":
        _emit(report.to_json(), args.out)
    else:
        _emit(report.to_text(), args.out)
    if args.report:
        Path(args.report).write_text(report.to_json())
    return 0 if report.passed else 1


COMMANDS = {
    "table1": cmd_table1,
    "solve": cmd_solve,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (DomainError, CliError, ConvergenceError, ValueError) as exc:
        print(f"dcf {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
