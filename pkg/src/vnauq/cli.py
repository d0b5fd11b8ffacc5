"""Command-line entry point: ``vnauq fuse | simulate | evaluate | pipeline``.

Exit codes: 0 success, 2 fuse stage, 3 simulate stage, 4 evaluate stage,
5 input/output (missing or unparsable files, invalid scenario), 1 usage.
"""

from __future__ import annotations

import argparse
import logging
import sys
from contextlib import contextmanager
from pathlib import Path

from . import __version__
from .errors import ParseError, ScenarioError, VnauqError
from .formats import parse_sample_csv
from .montecarlo import UNITS
from .pipeline import evaluate, fuse, match_aut_columns, simulate
from .report import read_posteriors, read_simulation, write_posteriors, write_report, write_simulation
from .scenario import load_scenario

log = logging.getLogger("vnauq")

EXIT_FUSE, EXIT_SIMULATE, EXIT_EVALUATE, EXIT_IO = 2, 3, 4, 5


class StageError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


@contextmanager
def stage(code):
    try:
        yield
    except (OSError, ParseError) as exc:
        raise StageError(EXIT_IO, str(exc)) from exc
    except VnauqError as exc:
        raise StageError(code, str(exc)) from exc


def _read(path, what):
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise StageError(EXIT_IO, f"cannot read {what} {path}: {exc.strerror}") from exc


def _parse_csv(path):
    try:
        return parse_sample_csv(_read(path, "sample file"))
    except ParseError as exc:
        raise StageError(EXIT_IO, f"{path}: {exc}") from exc


def _load_scenario(args):
    path = Path(args.scenario)
    if not path.is_file():
        raise StageError(EXIT_IO, f"scenario file not found: {path}")
    with stage(EXIT_IO):
        try:
            config = load_scenario(path)
        except ScenarioError as exc:
            raise ParseError(f"{path}: {exc}") from exc
    sc = config.scenario
    if args.seed is not None:
        sc.seed = args.seed
    if getattr(args, "draws", None) is not None:
        sc.draws = args.draws
    if getattr(args, "unit", None) is not None:
        sc.output_unit = args.unit
    with stage(EXIT_IO):
        try:
            sc.__post_init__()
        except ScenarioError as exc:
            raise ParseError(str(exc)) from exc
    return config


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise StageError(EXIT_IO, f"cannot write {out}: {exc.strerror}") from exc
    log.info("wrote %s", out)


def cmd_fuse(args):
    config = _load_scenario(args)
    tables = [_parse_csv(p) for p in args.sources or ()]
    with stage(EXIT_FUSE):
        fused = fuse(config.scenario.beliefs, tables)
    _emit(write_posteriors(fused), args.out)


def cmd_simulate(args):
    config = _load_scenario(args)
    if args.posteriors:
        with stage(EXIT_IO):
            tier_one = read_posteriors(_read(args.posteriors, "posteriors"))
    else:
        with stage(EXIT_FUSE):
            tier_one = fuse(config.scenario.beliefs)
    with stage(EXIT_SIMULATE):
        sim = simulate(config.scenario, tier_one, bins=args.bins)
    _emit(write_simulation(sim), args.out)


def cmd_evaluate(args):
    with stage(EXIT_IO):
        sim = read_simulation(_read(args.prior, "simulation"))
    aut = _parse_csv(args.aut)
    with stage(EXIT_EVALUATE):
        columns = match_aut_columns(aut, [f.frequency for f in sim.frequencies], args.aut_columns)
        report = evaluate(sim, columns)
    _emit(write_report(report), args.out)


def cmd_pipeline(args):
    # parse every input before any computation
    config = _load_scenario(args)
    tables = [_parse_csv(p) for p in args.sources or ()]
    aut = _parse_csv(args.aut)
    sc = config.scenario
    with stage(EXIT_FUSE):
        tier_one = fuse(sc.beliefs, tables)
    with stage(EXIT_SIMULATE):
        sim = simulate(sc, tier_one, bins=args.bins)
    with stage(EXIT_EVALUATE):
        columns = match_aut_columns(aut, sc.frequencies, config.aut_columns)
        report = evaluate(sim, columns)
    _emit(write_report(report), args.out)


def _seed(text):
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser():
    parser = argparse.ArgumentParser(
        prog="vnauq", description="Two-tier Bayesian / Monte Carlo uncertainty of one-port VNA S11."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenario=True):
        if scenario:
            p.add_argument("--scenario", required=True, help="scenario JSON file")
            p.add_argument("--seed", type=_seed, help="override the scenario seed")
        p.add_argument("--out", help="output file (default: stdout)")

    def mc_flags(p):
        p.add_argument("--draws", type=int, help="override the number of Monte Carlo draws")
        p.add_argument("--bins", type=int, default=30, help="histogram bins (default 30)")
        p.add_argument("--unit", choices=UNITS, help="override the output unit")

    p = sub.add_parser("fuse", help="tier-one fusion of source priors with sample files")
    common(p)
    p.add_argument("--sources", nargs="*", help="per-source sample CSV files")
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("simulate", help="Monte Carlo propagation with tier-one posteriors")
    common(p)
    mc_flags(p)
    p.add_argument("--posteriors", help="output of 'fuse' (default: priors pass through)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", help="tier-two fusion of the Monte Carlo prior with AUT samples")
    common(p, scenario=False)
    p.add_argument("--prior", required=True, help="output of 'simulate'")
    p.add_argument("--aut", required=True, help="repeated AUT measurements, one column per frequency")
    p.add_argument("--aut-columns", choices=("frequency", "order"), default="frequency")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pipeline", help="fuse, simulate and evaluate in one run")
    common(p)
    mc_flags(p)
    p.add_argument("--sources", nargs="*", help="per-source sample CSV files")
    p.add_argument("--aut", required=True, help="repeated AUT measurements, one column per frequency")
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        args.func(args)
    except StageError as exc:
        print(f"vnauq {args.command}: error: {exc}", file=sys.stderr)
        return exc.code
    return 0


if __name__ == "__main__":
    sys.exit(main())
