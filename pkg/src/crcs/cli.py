"""Command-line entry point: ``crcs mine``, ``crcs gen`` and ``crcs score``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .cohort import Matcher
from .dataset import load_csv
from .engine import MiningConfig, mine, read_rules_jsonl
from .errors import ConfigurationError, GenerationError, InputError
from .synthetic import GroundTruth, generate_combined, score

EXIT_OK, EXIT_INPUT, EXIT_CONFIG = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="crcs", description="Causal rule mining with retrospective cohort tests.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    m = sub.add_parser("mine", help="mine causal rules from a CSV file")
    m.add_argument("--input", required=True, help="CSV file with a header row")
    m.add_argument("--response", required=True, help="name of the response column")
    m.add_argument("--positive", default="1", help="response value counted as Z=1 (default 1)")
    m.add_argument("--min-lsupp", type=float, default=0.05, help="minimum local support (default 0.05)")
    m.add_argument("--max-len", type=_positive_int, default=4, help="maximum rule length (default 4)")
    m.add_argument("--confidence", type=float, default=0.95, choices=(0.95, 0.99))
    m.add_argument("--min-oratio", type=float, default=None,
                   help="fixed odds-ratio threshold replacing the confidence-interval tests")
    m.add_argument("--matcher", choices=("exact", "jaccard"), default="exact")
    m.add_argument("--jaccard-theta", type=float, default=0.9, help="similarity threshold (default 0.9)")
    m.add_argument("--runs", type=_positive_int, default=3, help="independent matching runs (default 3)")
    m.add_argument("--consensus", type=_positive_int, default=2,
                   help="runs a rule must appear in to be reported (default 2)")
    m.add_argument("--epsilon", type=_nonneg_int, default=None,
                   help="exclusivity count (default floor(min-lsupp * records))")
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--out", default=None, help="write the JSON-lines report here")
    m.add_argument("--no-prune", action="store_true", help="disable redundancy pruning (debugging)")
    m.add_argument("--threads", type=_positive_int, default=os.cpu_count() or 1,
                   help="worker processes for cohort tests (default: CPU count)")
    m.add_argument("--bins", type=_positive_int, default=None,
                   help="equi-width bins for continuous numeric columns (off by default)")
    m.add_argument("--binary", action="append", default=[], metavar="COLUMN",
                   help="declare a column as strictly 0/1 (repeatable)")
    m.add_argument("--all-rules", action="store_true",
                   help="also write tested rules that were not found causal")
    m.add_argument("--quiet", action="store_true", help="do not print the rule table")

    g = sub.add_parser("gen", help="generate a synthetic dataset with known causes")
    g.add_argument("--model", choices=("bn", "logistic"), default="bn")
    g.add_argument("--vars", type=_positive_int, required=True,
                   help="output columns including the response")
    g.add_argument("--rows", type=_positive_int, required=True)
    g.add_argument("--causes", type=_nonneg_int, required=True)
    g.add_argument("--combined", type=_nonneg_int, default=0, help="causes split into item pairs")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="output prefix; writes PREFIX.csv and PREFIX.truth.json")

    s = sub.add_parser("score", help="score a rules file against ground truth")
    s.add_argument("--rules", required=True)
    s.add_argument("--truth", required=True)
    return p


def _readable(path: str) -> Path:
    p = Path(path)
    if not p.is_file() or not os.access(p, os.R_OK):
        raise InputError(f"cannot read {path}")
    return p


def _writable(path: str) -> Path:
    p = Path(path)
    parent = p.parent if str(p.parent) else Path(".")
    if not parent.is_dir():
        raise InputError(f"output directory {parent} does not exist")
    if not os.access(parent, os.W_OK):
        raise InputError(f"output directory {parent} is not writable")
    return p


def _cmd_mine(args) -> int:
    src = _readable(args.input)
    out = _writable(args.out) if args.out else None
    try:
        matcher = Matcher(args.matcher, args.jaccard_theta)
        cfg = MiningConfig(
            delta=args.min_lsupp, max_len=args.max_len, confidence=args.confidence,
            min_oratio=args.min_oratio, matcher=matcher, runs=args.runs,
            consensus_min=args.consensus, seed=args.seed, epsilon=args.epsilon,
            prune=not args.no_prune, threads=args.threads,
        )
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from exc
    d = load_csv(src, args.response, args.positive, binary_columns=args.binary, bins=args.bins)
    if d.n_z == 0 or d.n_notz == 0:
        raise ConfigurationError(f"response {args.response!r} takes only one value")
    print(d.summary.to_json(), file=sys.stderr)
    report = mine(d, cfg)
    text = report.to_jsonl(d, include_tested=args.all_rules)
    if out is not None:
        out.write_text(text, encoding="utf-8")
    if not args.quiet:
        print(report.table(d))
        print(f"{len(report.causal_rules)} causal rules", file=sys.stderr)
    if out is None and args.quiet:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_gen(args) -> int:
    csv_path = _writable(f"{args.out}.csv")
    truth_path = _writable(f"{args.out}.truth.json")
    # --vars counts every output column, including the extra one per split cause
    base_vars = args.vars - args.combined
    if base_vars < 2:
        raise ConfigurationError("need at least one predictor besides the response")
    if args.causes > base_vars - 1:
        raise ConfigurationError("more causes than predictors")
    if args.combined > args.causes:
        raise ConfigurationError("combined causes must come from the planted causes")
    try:
        d, g = generate_combined(base_vars, args.rows, args.causes, args.combined, args.seed,
                                 model=args.model)
    except GenerationError as exc:
        raise ConfigurationError(str(exc)) from exc
    d.to_csv(csv_path)
    truth_path.write_text(g.to_json(), encoding="utf-8")
    print(f"wrote {csv_path} ({d.n_records} rows, {d.n_items} columns) and {truth_path}")
    return EXIT_OK


def _cmd_score(args) -> int:
    rules_path = _readable(args.rules)
    truth_path = _readable(args.truth)
    try:
        _, rules = read_rules_jsonl(rules_path)
        g = GroundTruth.from_json(truth_path.read_text(encoding="utf-8"))
    except (ValueError, KeyError) as exc:
        raise InputError(f"malformed input: {exc}") from exc
    s = score(rules, g)
    print(f"precision {s.precision:.4f}")
    print(f"recall    {s.recall:.4f}")
    print(f"f1        {s.f1:.4f}")
    if g.combined_causes:
        print(f"combined  {s.combined_hits}/{len(g.combined_causes)} found, {s.combined_extras} extra pairs")
    return EXIT_OK


COMMANDS = {"mine": _cmd_mine, "gen": _cmd_gen, "score": _cmd_score}


def run(argv=None) -> int:
    """Parse ``argv`` and execute one subcommand; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
