"""Command-line front end for the experiment harness.

Exit codes: 0 success, 2 configuration problems, 3 numerical failures,
4 filesystem problems.
"""

from __future__ import annotations

import argparse
import sys

from .errors import (BreakdownError, ConfigurationError, DefectiveMatrixError,
                     SingularModelError, SingularOperatorError, UsageError)
from .harness import emit_report, run_convergence, run_timedomain
from .medium import MEDIUM_PRESETS
from .oracles import courant_limit
from .operators import symmetry_defect
from .scenario import TEMPLATES, assemble_scenario, load_scenario

_CONFIG_ERRORS = (ConfigurationError, UsageError)
_NUMERICAL_ERRORS = (BreakdownError, DefectiveMatrixError,
                     SingularOperatorError, SingularModelError)


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wavemor",
        description="Krylov reduced-order models for stretched wave operators")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run(name, help_):
        cmd = sub.add_parser(name, help=help_)
        cmd.add_argument("scenario", help="scenario JSON file")
        cmd.add_argument("--out", required=True, help="output directory")
        cmd.add_argument("--overwrite", action="store_true",
                         help="allow writing into a non-empty directory")
        cmd.add_argument("--dense-cap", type=int, default=5000,
                         help="largest N the dense oracle may handle")
        cmd.add_argument("--no-reorth", action="store_true",
                         help="disable the re-orthogonalization pass")
        cmd.add_argument("--seed", type=int, default=None,
                         help="override the scenario seed")
        return cmd

    conv = add_run("run-convergence", "frequency-band convergence study")
    conv.add_argument("--self-convergence", action="store_true",
                      help="use the finest reduced model as reference "
                           "when the dense oracle is infeasible")
    add_run("run-time", "time-domain trace study")

    val = sub.add_parser("validate", help="check a scenario and report sizes")
    val.add_argument("scenario", help="scenario JSON file")

    sub.add_parser("list-presets", help="medium presets and scenario templates")
    return parser


def _validate(path) -> int:
    scenario = load_scenario(path)
    asm = assemble_scenario(scenario)
    print(f"scenario:   {scenario.name}")
    print(f"hash:       {scenario.scenario_hash()}")
    print(f"grid:       {' x '.join(str(s) for s in asm.grid.shape)} "
          f"(N = {asm.n})")
    print(f"speeds:     [{asm.medium.c_min:g}, {asm.medium.c_max:g}]")
    print(f"band:       [{scenario.omega_min:g}, {scenario.omega_max:g}] "
          f"rad/s, {scenario.band_samples} samples")
    print(f"matched at: {scenario.omega_match():g} rad/s")
    defect = symmetry_defect(asm.op)
    print(f"bilinear symmetry defect: {defect:.3e}")
    print(f"leapfrog dt bound: {courant_limit(asm.grid, asm.medium):.6g}")
    for m in scenario.methods:
        dims = ", ".join(str(m.dim_of(o)) for o in m.orders)
        print(f"method {m.label}: orders {list(m.orders)} -> d = {dims}")
    if scenario.t_max is not None:
        print(f"time window: [0, {scenario.t_max:g}] s, "
              f"{scenario.time_samples} samples"
              + (", leapfrog cross-check on" if scenario.leapfrog else ""))
    return 0


def _list_presets() -> int:
    print("medium presets:")
    for name in sorted(MEDIUM_PRESETS):
        _, describe = MEDIUM_PRESETS[name]
        print(f"  {name:<12} {describe}")
    print("scenario templates (wavemor.scenario.template):")
    for name in sorted(TEMPLATES):
        _, describe = TEMPLATES[name]
        print(f"  {name:<12} {describe}")
    return 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "list-presets":
            return _list_presets()
        if args.command == "validate":
            return _validate(args.scenario)
        scenario = load_scenario(args.scenario)
        if args.command == "run-convergence":
            report = run_convergence(
                scenario, dense_cap=args.dense_cap,
                self_convergence=args.self_convergence,
                reorthogonalize=not args.no_reorth, seed=args.seed)
        else:
            report = run_timedomain(
                scenario, dense_cap=args.dense_cap,
                reorthogonalize=not args.no_reorth, seed=args.seed)
        manifest = emit_report(report, args.out, overwrite=args.overwrite)
        print(f"wrote {len(manifest['files']) + 1} files to {args.out}")
        for check in report.checks:
            flag = "ok " if check["passed"] else "FAIL"
            print(f"  [{flag}] {check['name']}: observed {check['observed']}")
        return 0
    except _CONFIG_ERRORS as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
