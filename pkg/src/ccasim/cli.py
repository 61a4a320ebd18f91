"""Command-line entry point.

Exit status: 0 clean run, 2 protocol fault (barrier deadlock), 3 invalid
configuration or scenario file.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace

from .bundle import EXIT_CONFIG, EXIT_OK, EXIT_PROTOCOL, ResultBundle, emit_plot_data, render_figures, write_bundle
from .errors import ConfigError
from .scenario_file import load_scenario
from .sim import run, scenario_library

log = logging.getLogger("ccasim")

LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ccasim", description="Run a collaborative collision-avoidance scenario.")
    p.add_argument("--scenario", required=True,
                   help="scenario file (YAML) or library name: " + ", ".join(scenario_library()))
    p.add_argument("--mode", choices=("sync", "async"), help="negotiation mode")
    p.add_argument("--smax", type=int, help="negotiation iterations per CCAS epoch")
    p.add_argument("--seed", type=int, help="network and scheduler seed (unsigned 64-bit)")
    p.add_argument("--loss", type=float, help="message loss probability")
    p.add_argument("--delay-max", type=float, help="maximum message delay [s]")
    p.add_argument("--out", default="ccas-out", help="output directory for the result bundle")
    p.add_argument("--profile", choices=("sim", "field"), help="parameter profile for library scenarios")
    p.add_argument("--validate-only", action="store_true", help="check the scenario and exit")
    p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    return p


def configure_logging() -> None:
    level = os.environ.get("CCAS_LOG_LEVEL", "warn").lower()
    if level not in LOG_LEVELS:
        raise ConfigError(f"CCAS_LOG_LEVEL must be one of {', '.join(LOG_LEVELS)}, got {level!r}")
    logging.basicConfig(level=LOG_LEVELS[level], format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)


def resolve_scenario(args):
    lib = scenario_library()
    if args.scenario in lib:
        kw = {"profile": args.profile or "sim"}
        for key, val in (("mode", args.mode), ("seed", args.seed), ("loss", args.loss)):
            if val is not None:
                kw[key] = val
        sc = lib[args.scenario](**kw)
    elif os.path.exists(args.scenario) or os.sep in args.scenario or args.scenario.endswith((".yaml", ".yml")):
        sc = load_scenario(args.scenario)
        if args.profile and args.profile != sc.profile:
            log.warning("--profile %s ignored for scenario file with profile %s", args.profile, sc.profile)
    else:
        raise ConfigError(f"{args.scenario}: not a file and not a library scenario "
                          f"({', '.join(lib)})")
    net_kw = {}
    if args.mode is not None:
        net_kw["mode"] = args.mode
    if args.seed is not None:
        net_kw["seed"] = args.seed
    if args.loss is not None:
        net_kw["loss_p"] = args.loss
    if args.delay_max is not None:
        net_kw["T_delay"] = args.delay_max
    try:
        if net_kw:
            sc = replace(sc, net=replace(sc.net, **net_kw))
        if args.smax is not None:
            sc = replace(sc, splitting=replace(sc.splitting, s_max=args.smax))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return sc


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        configure_logging()
        sc = resolve_scenario(args)
    except ConfigError as exc:
        print(f"ccasim: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.validate_only:
        print(f"ok: {sc.name} ({len(sc.ships)} ships, {sc.net.mode})")
        return EXIT_OK
    log.info("running %s: %d ships, mode %s, seed %d", sc.name, len(sc.ships), sc.net.mode, sc.net.seed)
    result = run(sc)
    status = EXIT_PROTOCOL if result.aborted else EXIT_OK
    bundle = ResultBundle(result, status)
    try:
        write_bundle(bundle, args.out)
        plots = os.path.join(args.out, "plots")
        emit_plot_data(bundle, plots)
        if not args.no_figures:
            render_figures(bundle, plots)
    except OSError as exc:
        print(f"ccasim: cannot write results to {args.out}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if result.aborted:
        fault = next(f for f in result.faults if f["kind"] == "deadlock")
        print(f"ccasim: protocol fault: barrier deadlock at epoch {fault['epoch']} iteration "
              f"{fault['iteration']} (missing ships {fault['missing']})", file=sys.stderr)
    print(f"{sc.name}: min safety index {min(result.min_epsilon()):.3f} m, results in {args.out}")
    return status


if __name__ == "__main__":
    sys.exit(main())
