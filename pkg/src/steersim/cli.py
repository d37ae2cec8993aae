"""Command-line front end: ``steersim {sweep,prob-overhead,single-drop,selftest}``.

Exit codes: 0 success, 1 usage error, 2 config error, 3 numerical assertion.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import experiment, selftest
from .errors import ConfigError, DomainError, NumericalAssertionError
from .steering import optimal_rho

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3
DEFAULT_SCHEMES = ["MF", "ZF", "ZFBF", "IN", "OIS", "DIS"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _common(p: argparse.ArgumentParser, config_required: bool) -> None:
    p.add_argument("--config", required=config_required, help="sweep spec file (key = value or JSON)")
    p.add_argument("--seed", type=int, help="master seed (overrides the config)")
    p.add_argument("--out", help="output path (overrides output_path; stdout when absent)")
    p.add_argument("--threads", type=int, help="worker processes (default: $STEERSIM_THREADS or 1)")
    p.add_argument("--fallback", choices=["mf", "zf"], help="scheme used when a scheme's power does not fit")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="steersim", description="Interference-steering Monte-Carlo simulator.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _common(sub.add_parser("sweep", help="run a parameter sweep and write CSV rows"), True)
    p = sub.add_parser("prob-overhead", help="overhead-exceedance sweep; also writes <out>.curve.csv")
    _common(p, True)
    p = sub.add_parser("single-drop", help="dump every scheme's result on one drop as JSON")
    _common(p, False)
    p.add_argument("--point-index", type=int, default=0)
    p.add_argument("--drop-index", type=int, default=0)
    sub.add_parser("selftest", help="run the built-in invariant suites")
    return parser


def _spec(args) -> experiment.SweepSpec:
    overrides = {"master_seed": args.seed, "fallback": args.fallback}
    if args.config is None:
        return experiment.spec_from_mapping({"schemes": DEFAULT_SCHEMES}, **overrides)
    return experiment.load_spec(args.config, **overrides)


def _output(args, spec) -> Path | None:
    out = args.out or spec.output_path
    return Path(out) if out else None


def _cmd_sweep(args) -> int:
    spec = _spec(args)
    rows = experiment.run_sweep(spec, args.threads)
    out = _output(args, spec)
    experiment.write_csv(rows, out if out else sys.stdout)
    return EXIT_OK


def _cmd_prob_overhead(args) -> int:
    spec = _spec(args)
    report = experiment.prob_overhead(spec, args.threads)
    out = _output(args, spec)
    if out is None:
        experiment.write_csv(report.rows, sys.stdout)
        experiment.write_curve_csv(report.curve, sys.stdout)
    else:
        experiment.write_csv(report.rows, out)
        experiment.write_curve_csv(report.curve, out.with_suffix(".curve.csv"))
    return EXIT_OK


def _cmd_single_drop(args) -> int:
    spec = _spec(args)
    points = spec.channel_points()
    if not 0 <= args.point_index < len(points):
        raise ConfigError("point_index", f"must lie in [0, {len(points)})")
    point = points[args.point_index]
    drop = experiment.point_drop(spec, args.point_index, args.drop_index, point)
    fallback = spec.effective_fallback
    results = {}
    for rho in spec.axis_values("rho"):
        for label, name, r in spec.scheme_columns(rho):
            key = label if rho is None or name != "IS_FIXED" else f"IS_FIXED:{rho:g}"
            results[key] = experiment.evaluate_scheme(drop, name, r, fallback,
                                                           spec.budget_split, spec.dis_policy).as_dict()
    doc = {
        "seed": list(drop.seed),
        "point": point,
        "budget": {"p0e": drop.budget.p0e, "p1e": drop.budget.p1e, "sigma2": drop.budget.sigma2},
        "fallback": fallback.value,
        "results": results,
    }
    if drop.n_streams_pbs == 1 and drop.n_interferences == 1:
        sol = optimal_rho(drop)
        doc["rho_solution"] = {k: float(v) if isinstance(v, float) else bool(v)
                               for k, v in sol.__dict__.items()}
    text = json.dumps(doc, indent=2, allow_nan=True)
    out = _output(args, spec)
    if out is None:
        print(text)
    else:
        try:
            out.write_text(text + "\n", encoding="utf-8")
        except OSError as exc:
            raise OSError(f"cannot write {out}: {exc.strerror or exc}") from exc
    return EXIT_OK


def _cmd_selftest(args) -> int:
    results = selftest.run_all()
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERICAL


COMMANDS = {
    "sweep": _cmd_sweep,
    "prob-overhead": _cmd_prob_overhead,
    "single-drop": _cmd_single_drop,
    "selftest": _cmd_selftest,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalAssertionError as exc:
        print(f"numerical assertion failed: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except DomainError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


cli_main = main

if __name__ == "__main__":
    sys.exit(main())
