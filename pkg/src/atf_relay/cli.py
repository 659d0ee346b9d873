"""Command-line runner for the ATF outage experiments.

Every subcommand reads the same ``key = value`` config file, then applies
``--set key=value`` overrides. Non-parameter keys in the config (``grid``,
``series``, ``outputs``, ``blocks``, ``seed``, ...) act as defaults for the
matching flags, which lets each preset file under ``configs/`` describe one
experiment completely.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import asdict

from . import experiments as ex
from .battery import BatteryGrid, build_transition_matrix, dump_chain_csv, stationary_distribution
from .outage import atf_outage
from .params import ConfigError, InvalidParameterError, SystemParams, derive_link_gains, load_config, watts_to_dbm
from .simulate import SimConfig, run, run_replicated, write_result_csv

log = logging.getLogger("atf_relay")

EXTRA_KEYS = {"variable", "grid", "series", "outputs", "blocks", "warmup", "seed", "battery_model"}
REPORT_FIELDS = ("p_out", "p_mode_I", "p_mode_II", "p_mode_III", "phi_I", "phi_II", "phi_III", "p_direct", "P_E")


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key = value parameter file")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (repeatable)")
    parser.add_argument("--seed", type=int, help="random seed")
    parser.add_argument("--blocks", type=int, help="simulated blocks per run")
    parser.add_argument("--out", default="-", help="output CSV path (default: stdout)")
    parser.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="atf-relay", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analytic", help="closed-form outage and mode breakdown")
    _common(p)
    p.add_argument("--dump-chain", metavar="PATH", help="also write the transition matrix and pi as CSV")

    p = sub.add_parser("simulate", help="Monte Carlo block simulation")
    _common(p)
    p.add_argument("--battery-model", choices=("continuous", "discrete"))
    p.add_argument("--warmup", type=int)
    p.add_argument("--replications", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--trace", metavar="PATH", help="per-block trace CSV (single replication only)")

    p = sub.add_parser("sweep", help="outage versus P_S, E_T, N or L")
    _common(p)
    p.add_argument("--variable", choices=ex.VARIABLES)
    p.add_argument("--grid", help="start:stop:step, comma list, or 'levels' for E_T")
    p.add_argument("--series", help="extra curves, e.g. 'N=2,4,6; L=10,100'")
    p.add_argument("--outputs", help=f"comma list from {','.join(ex.OUTPUTS)}")
    p.add_argument("--warmup", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-timing", action="store_true", help="leave wall_time empty (reproducible bytes)")

    p = sub.add_parser("optimal-et", help="exhaustive search of the energy threshold")
    _common(p)
    p.add_argument("--curve", action="store_true", help="emit outage for every candidate level")

    p = sub.add_parser("compare", help="ATF with optimal E_T versus direct transmission")
    _common(p)
    p.add_argument("--grid", help="P_S grid in dBm")
    p.add_argument("--series", help="extra curves, e.g. 'N=2,4,6'")
    return parser


def _pick(flag, extras: dict, key: str, default=None, cast=str):
    if flag is not None:
        return flag
    if key in extras:
        return cast(extras[key])
    return default


def _grid(text: str, variable: str, params: SystemParams) -> list[float]:
    if text.strip() == "levels":
        if variable != "E_T":
            raise InvalidParameterError("'levels' grid only applies to E_T")
        return [float(x) for x in BatteryGrid(params.L, params.C, params.C).levels[1:]]
    return ex.parse_grid(text)


def cmd_analytic(args, params: SystemParams, extras: dict) -> None:
    g = derive_link_gains(params)
    report = atf_outage(params, g)
    row = {k: repr(v) for k, v in asdict(report).items()}
    ex.write_csv([row], REPORT_FIELDS, args.out)
    if args.dump_chain:
        M = build_transition_matrix(params, g)
        dump_chain_csv(args.dump_chain, M, stationary_distribution(M))


def cmd_simulate(args, params: SystemParams, extras: dict) -> None:
    cfg = SimConfig(
        blocks=_pick(args.blocks, extras, "blocks", 1_000_000, int),
        warmup=_pick(args.warmup, extras, "warmup", 10_000, int),
        seed=_pick(args.seed, extras, "seed", 0, int),
        battery_model=_pick(args.battery_model, extras, "battery_model", "continuous"),
    )
    if args.replications > 1:
        if args.trace:
            raise InvalidParameterError("--trace needs a single replication")
        result = run_replicated(params, cfg, args.replications, args.workers)
    else:
        result = run(params, cfg, trace=args.trace)
    extra = {"seed": cfg.seed, "P_S_dbm": repr(watts_to_dbm(params.P_S)), "N": params.N,
             "L": params.L, "E_T": repr(params.E_T)}
    out = sys.stdout if args.out == "-" else args.out
    write_result_csv(out, result, extra)


def cmd_sweep(args, params: SystemParams, extras: dict) -> None:
    variable = _pick(args.variable, extras, "variable", "P_S")
    grid_text = _pick(args.grid, extras, "grid", "10:36:2")
    outputs = _pick(args.outputs, extras, "outputs", "analytic,direct")
    series_text = _pick(args.series, extras, "series", "")
    spec = ex.SweepSpec(
        variable=variable,
        grid=_grid(grid_text, variable, params),
        base=params,
        outputs=tuple(o.strip() for o in outputs.split(",") if o.strip()),
        series=ex.parse_series(series_text),
        blocks=_pick(args.blocks, extras, "blocks", 1_000_000, int),
        warmup=_pick(args.warmup, extras, "warmup", 10_000, int),
        seed=_pick(args.seed, extras, "seed", 0, int),
    )
    rows = ex.sweep(spec, workers=args.workers, timing=not args.no_timing)
    failed = [r for r in rows if r["error"]]
    for r in failed:
        log.warning("point %s=%s (%s, %s) failed: %s", r["variable"], r["value"], r["series"], r["method"], r["error"])
    ex.write_csv(rows, ex.SWEEP_FIELDS, args.out)


def cmd_optimal_et(args, params: SystemParams, extras: dict) -> None:
    levels, outages = ex.et_curve(params)
    if args.curve:
        rows = [{"E_T": repr(float(e)), "outage": repr(float(o))} for e, o in zip(levels, outages)]
        ex.write_csv(rows, ("E_T", "outage"), args.out)
        return
    k = int(outages.argmin())
    row = {"E_T_opt": repr(float(levels[k])), "outage": repr(float(outages[k]))}
    ex.write_csv([row], ("E_T_opt", "outage"), args.out)


def cmd_compare(args, params: SystemParams, extras: dict) -> None:
    grid = ex.parse_grid(_pick(args.grid, extras, "grid", "10:36:2"))
    series = ex.parse_series(_pick(args.series, extras, "series", ""))
    ex.write_csv(ex.compare_direct(params, grid, series), ex.COMPARE_FIELDS, args.out)


COMMANDS = {
    "analytic": cmd_analytic,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "optimal-et": cmd_optimal_et,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        params, extras = load_config(args.config, args.overrides)
        unknown = sorted(set(extras) - EXTRA_KEYS)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        COMMANDS[args.command](args, params, extras)
    except (InvalidParameterError, OSError) as exc:
        print(f"atf-relay: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
