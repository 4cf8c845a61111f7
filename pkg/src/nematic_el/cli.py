"""Command-line entry point.

Exit codes: 0 success, 1 validation or assertion failure, 2 usage error,
3 runtime blow-up or IO failure.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .coefficients import presets_table
from .config import ConfigError, parse_config, parse_config_unchecked
from .dynamics import BlowUpError

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _read(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _load(path):
    return parse_config(_read(path))


def cmd_run(args):
    from .runner import run_simulation

    cfg = _load(args.config)
    if args.csv:
        from dataclasses import replace

        cfg = replace(cfg, output=replace(cfg.output, csv_path=args.csv))
    result = run_simulation(cfg, keep_snapshots=False)
    last = result.records[-1]
    print(f"t = {last.t:.6g}  E_Q = {last.e_total:.10g}  max|d| = {last.max_abs_d:.6g}  "
          f"records = {len(result.records)}")
    if cfg.output.csv_path:
        print(f"wrote {cfg.output.csv_path}")
    return EXIT_OK


def cmd_presets(_args):
    print(presets_table())
    return EXIT_OK


def cmd_validate(args):
    cfg, err, report = parse_config_unchecked(_read(args.config))
    if cfg is not None:
        print(cfg.validation)
        print(f"lambda1 = {cfg.lambda1:.6g}, lambda2 = {cfg.lambda2:.6g}, case {cfg.case}")
        return EXIT_OK
    if report is not None:
        print(report)
    print(f"invalid configuration: {err}", file=sys.stderr)
    return EXIT_FAIL


def cmd_steady(args):
    from .diagnostics import steady_state_solve
    from .runner import build_grid, director_field

    cfg = _load(args.config)
    d0 = director_field(build_grid(cfg), cfg.init["director"])
    res = steady_state_solve(d0, tol=args.tol, max_iters=args.max_iters, dt=args.dt)
    status = "converged" if res.converged else "NOT converged"
    print(f"{status} after {res.iterations} iterations, residual {res.residual:.3e}")
    if args.output:
        from .dynamics import SimState
        from .io import write_snapshot
        from .spectral import SpectralField

        write_snapshot(SimState(SpectralField.zeros(d0.grid, "vector"), res.d, 0.0), args.output)
        print(f"wrote {args.output}")
    return EXIT_OK if res.converged else EXIT_FAIL


def cmd_selftest(_args):
    from .checks import selftest

    results = selftest()
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_FAIL if failed else EXIT_OK


def build_parser():
    p = _Parser(prog="nematic-el", description="Regularised Ericksen-Leslie spectral simulator")
    p.add_argument("-v", "--verbose", action="store_true", help="log warnings such as CFL reports")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True
    r = sub.add_parser("run", help="integrate a configuration")
    r.add_argument("--config", required=True)
    r.add_argument("--csv", help="override output.csv_path")
    r.set_defaults(func=cmd_run)
    sub.add_parser("presets", help="print the model table").set_defaults(func=cmd_presets)
    v = sub.add_parser("validate", help="check coefficient constraints")
    v.add_argument("--config", required=True)
    v.set_defaults(func=cmd_validate)
    s = sub.add_parser("steady", help="gradient-flow steady state from the configured director")
    s.add_argument("--config", required=True)
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--max-iters", type=int, default=10_000)
    s.add_argument("--dt", type=float, default=0.05)
    s.add_argument("--output", help="write the equilibrium as a snapshot")
    s.set_defaults(func=cmd_steady)
    sub.add_parser("selftest", help="run the invariant suite").set_defaults(func=cmd_selftest)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.WARNING if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (BlowUpError, OSError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
