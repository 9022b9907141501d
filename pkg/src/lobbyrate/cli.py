"""Command-line entry point.

Exit codes: 0 success, 1 domain error, 2 configuration or usage error,
3 closed form diverges from the numerical oracle.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__
from .allocation import allocate, equivalent_utility
from .config import (
    Config,
    ConfigError,
    build_growth,
    build_monte_carlo,
    build_scenario,
    build_sweep,
    eta_of,
    load_config,
    parse_grid,
)
from .experiments import (
    FIGURE_DEFAULTS,
    FIGURES,
    ExperimentRecord,
    make_record,
    reproduce_figure,
    run_monte_carlo,
    run_sweep,
)
from .oracle import validate_closed_form
from .output import render
from .rates import compare_rates

EXIT_OK, EXIT_DOMAIN, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2, 3


def _common_options(parser: argparse.ArgumentParser, suppress: bool):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", metavar="PATH", default=default, help="YAML config file")
    parser.add_argument("--seed", type=int, metavar="U64", default=default,
                        help="random seed (overrides experiment.seed)")
    parser.add_argument("--format", choices=("csv", "json"), default=default,
                        help="output format (overrides output.format)")
    parser.add_argument("--out", metavar="PATH", default=default,
                        help="output file (overrides output.path; default stdout)")
    parser.add_argument("--precision", type=int, metavar="N", default=default,
                        help="significant digits for numbers (default 12)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lobbyrate",
        description="Optimal allocations and equivalent discount rates for heterogeneous groups.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _common_options(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        _common_options(p, suppress=True)
        return p

    add("allocate", "closed-form allocation, equivalent rate and validity flag")
    p = add("sweep", "sweep theta or time over a grid")
    p.add_argument("--variable", choices=("theta", "time"))
    p.add_argument("--grid", help="start:stop:step (stop included) or comma-separated values")
    p = add("montecarlo", "replicate allocation over sampled group attributes")
    p.add_argument("--replications", type=int)
    p = add("figure", "reproduce one of the canned figure experiments")
    p.add_argument("figure_id", choices=FIGURES, metavar="{F1..F11}")
    p = add("oracle-check", "compare the closed form against the brute-force maximizer")
    p.add_argument("--resolution", type=float)
    p = add("compare-rates", "lobbying, welfare- and policy-equivalent rates at one time")
    p.add_argument("--t", type=float, dest="time")
    return parser


def _cli_grid(text: str | None):
    if text is None:
        return None
    try:
        if ":" in text:
            return parse_grid(text)
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as err:
        raise ConfigError(str(err), key="--grid") from None


def _cmd_allocate(cfg: Config, seed: int):
    sc = build_scenario(cfg, seed)
    alloc = allocate(sc)
    u_star = equivalent_utility(sc.total_resource, alloc.equivalent_rate, sc.time, sc.sigma)
    rows = [[i + 1, sc.weights[i], sc.rates[i], alloc.consumption[i], alloc.equivalent_rate,
             u_star, float(alloc.min_utility_at_favored)] for i in range(sc.n)]
    columns = ["group", "wealth_weight", "discount_rate", "consumption", "rho_star",
               "u_star_w", "valid"]
    spec = {"kind": "allocate", "theta": sc.theta, "sigma": sc.sigma, "w": sc.total_resource,
            "t": sc.time}
    return make_record("allocate", spec, columns, rows), {}, EXIT_OK


def _cmd_oracle(cfg: Config, seed: int, resolution: float | None):
    sc = build_scenario(cfg, seed)
    res = resolution or cfg.experiment.resolution or 0.02
    if not res > 0:
        raise ConfigError(f"resolution must be positive, got {res!r}", key="--resolution")
    rep = validate_closed_form(sc, res)
    rows = [[i + 1, rep.closed_form[i], rep.oracle.argmax[i]] for i in range(sc.n)]
    spec = {"kind": "oracle-check", "resolution": res, "theta": sc.theta, "sigma": sc.sigma,
            "w": sc.total_resource, "t": sc.time}
    report = {
        "max_abs_gap": rep.max_abs_gap,
        "welfare_gap": rep.welfare_gap,
        "tolerance": rep.tolerance,
        "final_resolution": rep.oracle.grid_resolution,
        "min_utility_at_favored": rep.min_utility_at_favored,
        "within_tolerance": rep.within_tolerance,
        "flag_agrees": rep.flag_agrees,
    }
    record = make_record("oracle-check", spec, ["group", "closed_form", "oracle"], rows)
    if not rep.within_tolerance:
        record.notes.append("closed form diverges from the oracle: the favored group does not "
                            "attain the minimum utility, so the first-order solution is not optimal")
    return record, report, EXIT_OK if rep.within_tolerance else EXIT_DIVERGED


def _cmd_compare(cfg: Config, seed: int, t: float | None):
    sc = build_scenario(cfg, seed)
    if t is not None and t < 0:
        raise ConfigError("time must be >= 0", key="--t")
    model = build_growth(cfg)
    mode = cfg.experiment.policy_mode or "tolerance"
    cmp = compare_rates(sc, eta_of(cfg), model, t, mode, cfg.experiment.aggregate or 1.0)
    columns = ["t", "theta", "rho_lobby", "rho_welfare", "rho_policy", "delta_disagreement"]
    rows = [[cmp.t, cmp.theta, cmp.rho_lobby, cmp.rho_welfare, cmp.rho_policy,
             cmp.delta_disagreement]]
    spec = {"kind": "compare-rates", "eta": eta_of(cfg), "policy_mode": mode,
            "growth": {"gamma": model.exponent, "delta": model.depreciation, "S0": model.stock}}
    record = make_record("compare-rates", spec, columns, rows,
                         notes=["delta_disagreement = rho_lobby - rho_welfare (proxy measure)"])
    return record, {}, EXIT_OK


def _cmd_figure(cfg: Config, seed: int | None, figure_id: str):
    overrides = dict(cfg.figure)
    if seed is not None and "seed" in FIGURE_DEFAULTS[figure_id]:
        overrides["seed"] = seed
    try:
        record = reproduce_figure(figure_id, overrides)
    except ValueError as err:
        raise ConfigError(str(err), key="figure") from None
    return record, {}, EXIT_OK


def _dispatch(args, cfg: Config, seed: int | None) -> tuple[ExperimentRecord, dict, int]:
    s = 0 if seed is None else seed
    cmd = args.command
    if cmd == "allocate":
        return _cmd_allocate(cfg, s)
    if cmd == "sweep":
        spec = build_sweep(cfg, s, args.variable, _cli_grid(args.grid))
        return run_sweep(spec), {}, EXIT_OK
    if cmd == "montecarlo":
        if args.replications is not None and args.replications < 1:
            raise ConfigError("replications must be >= 1", key="--replications")
        return run_monte_carlo(build_monte_carlo(cfg, s, args.replications)), {}, EXIT_OK
    if cmd == "figure":
        return _cmd_figure(cfg, seed, args.figure_id)
    if cmd == "oracle-check":
        return _cmd_oracle(cfg, s, args.resolution)
    if cmd == "compare-rates":
        return _cmd_compare(cfg, s, args.time)
    raise ConfigError(f"unknown command {cmd!r}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config_path = getattr(args, "config", None)
        if config_path is None and args.command != "figure":
            raise ConfigError(f"{args.command} needs --config", key="--config")
        cfg = load_config(config_path) if config_path else Config()

        seed = getattr(args, "seed", None)
        if seed is None:
            seed = cfg.experiment.seed
        if seed is not None and not 0 <= seed < 2 ** 64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed}", key="--seed")
        fmt = getattr(args, "format", None) or cfg.output.format
        out_path = getattr(args, "out", None) or cfg.output.path
        precision = getattr(args, "precision", None) or cfg.output.precision
        if not 1 <= precision <= 17:
            raise ConfigError("precision must lie in [1, 17]", key="--precision")

        with np.errstate(all="ignore"):
            record, report, code = _dispatch(args, cfg, seed)
    except ConfigError as err:
        print(f"lobbyrate: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, ZeroDivisionError, ArithmeticError, NotImplementedError,
            RuntimeError) as err:
        print(f"lobbyrate: error: {err}", file=sys.stderr)
        return EXIT_DOMAIN

    text = render(record, fmt, command=args.command, seed=seed, config=cfg,
                  precision=precision, extra=report or None)
    if out_path:
        try:
            with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        except OSError as err:
            print(f"lobbyrate: cannot write output: {err}", file=sys.stderr)
            return EXIT_DOMAIN
    else:
        sys.stdout.write(text)
    if code == EXIT_DIVERGED:
        print(f"lobbyrate: closed form diverges from oracle (max_abs_gap="
              f"{report['max_abs_gap']:.3g}, tolerance={report['tolerance']:.3g})", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
