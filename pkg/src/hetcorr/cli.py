"""Command-line interface: estimate, theory, simulate, verify.

Reports are JSON on stdout (diagnostics go to stderr) with the fixed
top-level shape {manifest, config, results}.  Exit codes are a stable
contract:

    0  success (for verify: all checks passed)
    1  one or more verify checks failed
    2  malformed CSV or unparsable sequence expression
    3  exact ties under the strict ties policy
    4  fewer than 2 observations
    5  parameter outside the family domain (index reported)
    6  failed statistical verdicts under --strict-verdicts
    7  point budget exceeded without --force

Reports are byte-identical for identical commands and seeds; the manifest
timestamp stays null unless --stamp is passed (which breaks that
guarantee on purpose).
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import sys

import numpy as np

from . import __version__, families, harness, rankcoef, seqspec, theory
from .errors import (
    BudgetError,
    CsvFormatError,
    DegenerateSampleError,
    HetcorrError,
    ParamDomainError,
    SeqEvalError,
    SeqSyntaxError,
    TiesError,
)

EXIT_VERIFY_FAILED = 1
EXIT_BAD_INPUT = 2
EXIT_TIES = 3
EXIT_TOO_SMALL = 4
EXIT_DOMAIN = 5
EXIT_VERDICTS = 6
EXIT_BUDGET = 7

_THEORY_STREAM = 2**48


def _manifest(command: str, argv: list[str], seed: int | None, out_path: str | None, stamp: bool) -> dict:
    return {
        "tool": "hetcorr",
        "version": __version__,
        "command": command,
        "argv": argv,
        "seed": seed,
        "timestamp_utc": (
            datetime.datetime.now(datetime.timezone.utc).isoformat() if stamp else None
        ),
        "out_path": out_path,
    }


def _emit(report: dict, out_path: str | None) -> None:
    text = json.dumps(report, indent=2) + "\n"
    sys.stdout.write(text)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as f:
            f.write(text)


def _fail(code: int, message: str) -> int:
    print(f"hetcorr: error: {message}", file=sys.stderr)
    return code


def _parse_coefficients(text: str) -> tuple[str, ...]:
    names = tuple(s.strip() for s in text.split(",") if s.strip())
    unknown = set(names) - set(rankcoef.COEFFICIENT_NAMES)
    if unknown:
        raise HetcorrError(
            f"unknown coefficients {sorted(unknown)}; choose from {rankcoef.COEFFICIENT_NAMES}"
        )
    return names


def read_xy_csv(path: str) -> rankcoef.Sample:
    """Two numeric columns, '.' decimal separator, optional 'x,y' header."""
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            rows = [row for row in csv.reader(f) if row and any(cell.strip() for cell in row)]
    except OSError as exc:
        raise CsvFormatError(f"cannot read {path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise CsvFormatError(f"{path} is not UTF-8: {exc}") from exc
    if rows and [c.strip().lower() for c in rows[0]] == ["x", "y"]:
        rows = rows[1:]
    xs, ys = [], []
    for k, row in enumerate(rows, start=1):
        if len(row) != 2:
            raise CsvFormatError(f"row {k}: expected 2 columns, found {len(row)}")
        pair = []
        for col, cell in zip(("x", "y"), row):
            try:
                v = float(cell.strip())
            except ValueError:
                raise CsvFormatError(f"row {k}, column {col}: {cell.strip()!r} is not a number")
            if not np.isfinite(v):
                raise CsvFormatError(f"row {k}, column {col}: non-finite value {cell.strip()!r}")
            pair.append(v)
        xs.append(pair[0])
        ys.append(pair[1])
    if len(xs) < 2:
        raise DegenerateSampleError(f"need at least 2 data rows, found {len(xs)}")
    return rankcoef.Sample(np.array(xs), np.array(ys), rankcoef.Provenance.ingested(path))


def write_sample_csv(sample: rankcoef.Sample, path: str) -> None:
    """Serialize with 17 significant digits so re-ingestion is value-exact."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write("x,y\n")
        for x, y in zip(sample.x, sample.y):
            f.write(f"{x:.17g},{y:.17g}\n")


def cmd_estimate(args, argv: list[str]) -> int:
    try:
        sample = read_xy_csv(args.csv)
        coefficients = _parse_coefficients(args.coefficients)
        cs = rankcoef.compute_set(sample, coefficients, ties=args.ties)
    except CsvFormatError as exc:
        return _fail(EXIT_BAD_INPUT, str(exc))
    except TiesError as exc:
        return _fail(EXIT_TIES, str(exc))
    except DegenerateSampleError as exc:
        return _fail(EXIT_TOO_SMALL, str(exc))
    except HetcorrError as exc:
        return _fail(EXIT_BAD_INPUT, str(exc))
    report = {
        "manifest": _manifest("estimate", argv, None, None, args.stamp),
        "config": {"csv": args.csv, "ties": args.ties, "coefficients": list(coefficients)},
        "results": cs.as_dict(),
    }
    _emit(report, None)
    return 0


def cmd_theory(args, argv: list[str]) -> int:
    try:
        family = families.by_name(args.family)
        result = theory.tau_n(
            family,
            args.seq,
            args.n,
            summation=args.summation,
            threads=args.threads,
            pair_budget=args.pair_budget,
            mc_fallback=args.mc_fallback,
            rng=harness.derive_stream(args.seed, _THEORY_STREAM),
            mc_pairs=args.mc_pairs,
            mc_reps_per_pair=args.mc_reps_per_pair,
        )
    except (SeqSyntaxError, SeqEvalError) as exc:
        return _fail(EXIT_BAD_INPUT, str(exc))
    except ParamDomainError as exc:
        return _fail(EXIT_DOMAIN, str(exc))
    except BudgetError as exc:
        return _fail(EXIT_BUDGET, str(exc))
    except DegenerateSampleError as exc:
        return _fail(EXIT_TOO_SMALL, str(exc))
    except HetcorrError as exc:
        return _fail(EXIT_BAD_INPUT, str(exc))
    report = {
        "manifest": _manifest("theory", argv, args.seed, None, args.stamp),
        "config": {
            "family": args.family,
            "seq": args.seq,
            "n": args.n,
            "summation": args.summation,
            "pair_budget": args.pair_budget,
            "mc_fallback": args.mc_fallback,
        },
        "results": result.as_dict(),
    }
    _emit(report, None)
    return 0


def cmd_simulate(args, argv: list[str]) -> int:
    try:
        config = harness.ExperimentConfig(
            family=families.by_name(args.family),
            seq=seqspec.parse_seq(args.seq),
            n=args.n,
            replications=args.replications,
            seed=args.seed,
            coefficients=_parse_coefficients(args.coefficients),
            ties=args.ties,
            budget_override=args.force,
            pair_budget=args.pair_budget,
        )
        report_data = harness.run_experiment(config)
        if args.dump_sample:
            write_sample_csv(harness.replication_sample(config, 0), args.dump_sample)
    except (SeqSyntaxError, SeqEvalError) as exc:
        return _fail(EXIT_BAD_INPUT, str(exc))
    except ParamDomainError as exc:
        return _fail(EXIT_DOMAIN, str(exc))
    except BudgetError as exc:
        return _fail(EXIT_BUDGET, str(exc))
    except TiesError as exc:
        return _fail(EXIT_TIES, str(exc))
    except DegenerateSampleError as exc:
        return _fail(EXIT_TOO_SMALL, str(exc))
    except HetcorrError as exc:
        return _fail(EXIT_BAD_INPUT, str(exc))
    report = {
        "manifest": _manifest("simulate", argv, args.seed, args.out, args.stamp),
        "config": config.as_dict(),
        "results": report_data.as_dict(),
    }
    _emit(report, args.out)
    if args.strict_verdicts and any(v is False for v in report_data.verdicts.values()):
        print("hetcorr: one or more statistical verdicts failed", file=sys.stderr)
        return EXIT_VERDICTS
    return 0


def cmd_verify(args, argv: list[str]) -> int:
    checks = harness.verify_suite(
        args.seed,
        pair_grid_reps=args.grid_reps,
        ks_draws=args.ks_draws,
        kendall_cases=args.kendall_cases,
        corrupt=args.corrupt_fixture,
    )
    all_ok = all(c.passed for c in checks)
    if args.json:
        report = {
            "manifest": _manifest("verify", argv, args.seed, None, args.stamp),
            "config": {
                "grid_reps": args.grid_reps,
                "ks_draws": args.ks_draws,
                "kendall_cases": args.kendall_cases,
                "corrupt_fixture": args.corrupt_fixture,
            },
            "results": {"all_passed": all_ok, "checks": [c.as_dict() for c in checks]},
        }
        _emit(report, None)
    else:
        width = max(len(c.name) for c in checks)
        for c in checks:
            print(f"{c.name:<{width}}  {'PASS' if c.passed else 'FAIL'}  {c.details}")
        print(f"{'overall':<{width}}  {'PASS' if all_ok else 'FAIL'}")
    return 0 if all_ok else EXIT_VERIFY_FAILED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hetcorr", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"hetcorr {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    pe = sub.add_parser("estimate", help="coefficients from a two-column CSV")
    pe.add_argument("csv")
    pe.add_argument("--ties", choices=("strict", "literal"), default="strict")
    pe.add_argument("--coefficients", default="kendall,spearman,blended_r,pearson")
    pe.add_argument("--stamp", action="store_true", help="embed a wall-clock timestamp")
    pe.set_defaults(func=cmd_estimate)

    pt = sub.add_parser("theory", help="theoretical tau_n for a family and sequence")
    pt.add_argument("--family", required=True, choices=("normal", "fgm", "pareto"))
    pt.add_argument("--seq", required=True, help="expression in i, e.g. 'sin(i)'")
    pt.add_argument("--n", required=True, type=int)
    pt.add_argument("--summation", choices=("compensated", "naive"), default="compensated")
    pt.add_argument("--threads", type=int, default=None)
    pt.add_argument("--pair-budget", type=int, default=None)
    pt.add_argument("--mc-fallback", action="store_true")
    pt.add_argument("--mc-pairs", type=int, default=2000)
    pt.add_argument("--mc-reps-per-pair", type=int, default=500)
    pt.add_argument("--seed", type=int, default=0)
    pt.add_argument("--stamp", action="store_true")
    pt.set_defaults(func=cmd_theory)

    ps = sub.add_parser("simulate", help="seeded replicated experiment")
    ps.add_argument("--family", required=True, choices=("normal", "fgm", "pareto"))
    ps.add_argument("--seq", required=True)
    ps.add_argument("--n", required=True, type=int)
    ps.add_argument("--replications", "-R", type=int, default=1)
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--coefficients", default="kendall")
    ps.add_argument("--ties", choices=("strict", "literal"), default="strict")
    ps.add_argument("--out", default=None, help="also write the JSON report here")
    ps.add_argument("--dump-sample", default=None, help="write replication 0 as CSV")
    ps.add_argument("--strict-verdicts", action="store_true")
    ps.add_argument("--force", action="store_true", help="override the point budget")
    ps.add_argument("--pair-budget", type=int, default=200_000_000)
    ps.add_argument("--stamp", action="store_true")
    ps.set_defaults(func=cmd_simulate)

    pv = sub.add_parser("verify", help="run the oracle battery")
    pv.add_argument("--seed", type=int, default=0)
    pv.add_argument("--json", action="store_true")
    pv.add_argument("--grid-reps", type=int, default=10**6)
    pv.add_argument("--ks-draws", type=int, default=10**5)
    pv.add_argument("--kendall-cases", type=int, default=1000)
    pv.add_argument("--corrupt-fixture", choices=("fgm-pair",), default=None)
    pv.add_argument("--stamp", action="store_true")
    pv.set_defaults(func=cmd_verify)
    return p


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    return args.func(args, argv)


if __name__ == "__main__":
    sys.exit(main())
