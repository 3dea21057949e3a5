"""Command line entry point ``fkdv``.

Exit codes: 0 success/PASS, 1 FAIL verdict, 2 configuration or usage
error, 3 solver blow-up.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .diagnostics import ladder_plan, run_propagation_experiment
from .errors import BlowUpError, ConfigurationError, ExperimentFailedError, FKdVError, SnapshotFormatError
from .experiment_io import load_config, read_snapshot, write_experiment, write_jsonl, write_series_csv, write_snapshot
from .probes import KINDS, resolution_stability
from .solver import run as run_solver
from .verification import operator_suite, weight_suite
from .weights import WeightParams

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_BLOWUP = 0, 1, 2, 3

log = logging.getLogger("fkdv")


def _print_checks(checks, show_all=False):
    for c in checks:
        if c.passed is None:
            tag = "INFO"
        else:
            tag = "PASS" if c.passed else "FAIL"
        if show_all or c.passed is not True:
            print(f"{tag}  {c.name}  residual={c.residual:.3e}  {c.detail}".rstrip())
    n_fail = sum(c.passed is False for c in checks)
    n_pass = sum(c.passed is True for c in checks)
    print(f"{n_pass} passed, {n_fail} failed, {sum(c.passed is None for c in checks)} measured")
    return n_fail == 0


def cmd_run(args):
    cfg = load_config(args.config)
    out = cfg.output_dir(args.output)
    try:
        result = run_propagation_experiment(cfg)
    except ExperimentFailedError as exc:
        write_jsonl(out / "report.jsonl", [r.as_record() for r in exc.records or []]
                    + [dict(kind="failure", message=str(exc))])
        print(f"blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    paths = write_experiment(result, cfg, out)
    for c in result.verdict.checks:
        tag = "n/a " if c.passed is None else ("PASS" if c.passed else "FAIL")
        print(f"{tag}  {c.name}: {c.detail}")
    print(f"verdict: {'PASS' if result.verdict.passed else 'FAIL'}  (results in {out})")
    log.debug("wrote %s", paths)
    return EXIT_OK if result.verdict.passed else EXIT_FAIL


def cmd_resume(args):
    cfg = load_config(args.config)
    try:
        snap = read_snapshot(args.snapshot)
    except (OSError, SnapshotFormatError) as exc:
        print(f"cannot read snapshot: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if snap.grid != cfg.grid or snap.alpha != cfg.alpha:
        print("snapshot grid/alpha do not match the config", file=sys.stderr)
        return EXIT_CONFIG
    out = cfg.output_dir(args.output)
    try:
        final = run_solver(snap.state, cfg.solver_config())
    except BlowUpError as exc:
        print(f"blow-up at t = {exc.t}", file=sys.stderr)
        if exc.state is not None:
            write_snapshot(exc.state, out / "last_finite.fkdv", cfg.alpha)
        return EXIT_BLOWUP
    write_snapshot(final, out / "resumed.fkdv", cfg.alpha)
    write_series_csv(out / "conserved_resumed.csv", ["t", "mass", "l2_squared", "hamiltonian", "strichartz"],
                     final.conserved_log)
    print(f"resumed from t = {snap.state.t:g} to t = {final.t:g} ({final.step_count} steps total)")
    return EXIT_OK


def cmd_verify_operators(args):
    checks = operator_suite(quick=args.quick)
    ok = _print_checks(checks, args.verbose)
    if args.output:
        write_jsonl(Path(args.output) / "operators.jsonl", [c.as_record() for c in checks])
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify_weights(args):
    params = None
    if args.epsilon is not None or args.b is not None:
        if args.epsilon is None or args.b is None:
            raise ConfigurationError("give both --epsilon and --b")
        params = [WeightParams(args.epsilon, args.b)]
    reports, checks = weight_suite(params)
    ok = _print_checks(checks, args.verbose)
    for rep in reports:
        c = rep.constants
        print(f"eps={rep.params.epsilon:g} b={rep.params.b:g}: c1={c['c1']:.4g} c2={c['c2']:.4g}")
    if args.output:
        write_jsonl(Path(args.output) / "weights.jsonl", [r for rep in reports for r in rep.as_records()])
    return EXIT_OK if ok else EXIT_FAIL


def cmd_ladder(args):
    plan = ladder_plan(args.alpha, args.m)
    print(f"alpha = {plan.alpha:g}, m = {plan.m}: case ({plan.case_tag}), k = {plan.k}, "
          f"{plan.n_fractional} fractional steps")
    print(f"{'step':<6}{'n':>3}  exponent")
    for kind, n, e in plan.rows():
        print(f"{kind:<6}{n:>3}  {e:.6g}")
    return EXIT_OK


def _parse_params(items):
    out = {}
    for item in items or []:
        key, _, val = item.partition("=")
        if not _:
            raise ConfigurationError(f"expected key=value, got {item!r}")
        try:
            out[key] = int(val) if val.lstrip("-").isdigit() else float(val)
        except ValueError:
            raise ConfigurationError(f"bad value in {item!r}") from None
    return out


def cmd_probe(args):
    if args.inequality not in KINDS:
        raise ConfigurationError(f"unknown inequality {args.inequality!r}; choose from {', '.join(KINDS)}")
    coarse, fine = resolution_stability(args.inequality, _parse_params(args.param), size=args.size, seed=args.seed)
    print(f"{args.inequality} {coarse.params}")
    print(f"  n={coarse.n_points}: measured constant {coarse.measured_best_constant:.6g}")
    print(f"  n={fine.n_points}: measured constant {fine.measured_best_constant:.6g}")
    if args.output:
        write_jsonl(Path(args.output) / "probes.jsonl", [coarse.as_record(), fine.as_record()], append=True)
    finite = all(r.measured_best_constant < float("inf") for r in (coarse, fine))
    return EXIT_OK if finite else EXIT_FAIL


def build_parser():
    p = argparse.ArgumentParser(prog="fkdv", description="fractional KdV simulation and verification lab")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("run", help="run a propagation experiment from a config file")
    s.add_argument("config")
    s.add_argument("-o", "--output", help="output directory (overrides config and FKDV_OUTPUT_DIR)")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("resume", help="continue a run from a snapshot")
    s.add_argument("snapshot")
    s.add_argument("config")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_resume)

    s = sub.add_parser("verify-operators", help="operator, coefficient and commutator checks")
    s.add_argument("--quick", action="store_true", help="smaller ensembles")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_verify_operators)

    s = sub.add_parser("verify-weights", help="cutoff-family property checks")
    s.add_argument("--epsilon", type=float)
    s.add_argument("--b", type=float)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_verify_weights)

    s = sub.add_parser("ladder", help="print the regularity ladder")
    s.add_argument("alpha", type=float)
    s.add_argument("m", type=int)
    s.set_defaults(func=cmd_ladder)

    s = sub.add_parser("probe", help="measure an inequality constant")
    s.add_argument("inequality", help=", ".join(KINDS))
    s.add_argument("--param", action="append", metavar="KEY=VALUE")
    s.add_argument("--size", type=int, default=30)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_probe)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BlowUpError as exc:
        print(f"blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except FKdVError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
