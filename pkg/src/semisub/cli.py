"""Command-line entry point ``sweep``.

    sweep run --config sweep.yaml [--mode freq|time|both] [--designs d=15..24:1 hhp=1,4.5,8]
              [--out DIR] [--seed N] [--jobs N]
    sweep extreme --config sweep.yaml [--out DIR] [--jobs N]
    sweep report --in DIR

Exit status: 0 success, 1 partial failure (or nothing to report), 2 configuration error.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time

from .config import MODES, ConfigError, SweepConfig, load_config, override, parse_range
from . import sweep

log = logging.getLogger("semisub")

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG = 0, 1, 2


def _parse_designs(tokens) -> dict:
    """``d=15..24:1 hhp=1,4.5,8`` -> {"d_values": ..., "h_values": ...}."""
    out = {}
    for tok in tokens or ():
        key, sep, value = tok.partition("=")
        if not sep:
            raise ConfigError(f"design selector {tok!r} must look like d=... or hhp=...")
        key = key.strip().lower()
        if key == "d":
            out["d_values"] = parse_range(value)
        elif key in ("hhp", "h_hp", "h"):
            out["h_values"] = parse_range(value)
        else:
            raise ConfigError(f"unknown design selector {key!r}")
    return out


def _config(args) -> SweepConfig:
    cfg = load_config(args.config) if args.config else SweepConfig()
    changes = dict(out_dir=getattr(args, "out", None), jobs=getattr(args, "jobs", None),
                   seed=getattr(args, "seed", None), mode=getattr(args, "mode", None))
    changes.update(_parse_designs(getattr(args, "designs", None)))
    try:
        return override(cfg, **changes)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_run(args) -> int:
    cfg = _config(args)
    t0 = time.perf_counter()
    results = sweep.run_sweep(cfg)
    sweep.report(results, cfg.out_dir)
    log.info("sweep of %d designs finished in %.1f s -> %s", len(results),
             time.perf_counter() - t0, cfg.out_dir)
    sys.stdout.write(sweep.summary_text(results))
    return sweep.exit_status(results)


def cmd_extreme(args) -> int:
    cfg = _config(args)
    t0 = time.perf_counter()
    results = sweep.run_extreme(cfg)
    sweep.write_extreme(results, cfg.out_dir)
    log.info("extreme runs finished in %.1f s", time.perf_counter() - t0)
    for r in results:
        if r.extreme:
            print(f"d={r.d:g} h_hp={r.h_hp:g}: mean max |M_yt| = {r.extreme['mean_max_M_yt']:.4e} Nm, "
                  f"mean max |a_tt| = {r.extreme['mean_max_a_tt'] / 9.81:.3f} g")
        else:
            print(f"d={r.d:g} h_hp={r.h_hp:g}: {r.status} ({r.error})")
    return sweep.exit_status(results)


def cmd_report(args) -> int:
    results = sweep.load_results(args.input)
    sweep.report(results, args.input, sweep.load_extreme(args.input))
    sys.stdout.write(sweep.summary_text(results))
    return sweep.exit_status(results)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sweep", description="Semi-submersible FOWT design sweep")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="operational sweep over the design space")
    run.add_argument("--config")
    run.add_argument("--mode", choices=MODES)
    run.add_argument("--designs", nargs="+", metavar="SEL")
    run.add_argument("--out")
    run.add_argument("--seed", type=int)
    run.add_argument("--jobs", type=int)
    run.set_defaults(func=cmd_run)

    ext = sub.add_parser("extreme", help="DLC 6.1 parked extremes")
    ext.add_argument("--config")
    ext.add_argument("--designs", nargs="+", metavar="SEL")
    ext.add_argument("--out")
    ext.add_argument("--jobs", type=int)
    ext.set_defaults(func=cmd_extreme)

    rep = sub.add_parser("report", help="regenerate reports from persisted results")
    rep.add_argument("--in", dest="input", required=True)
    rep.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
