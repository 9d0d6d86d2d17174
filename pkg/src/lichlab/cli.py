"""Command-line front end.

Subcommands:
  solve         one coupled solve from a config file
  sweep         stability sweep along the perturbation schedule
  instability3  blow-up family demo on the round 3-sphere
  verify        module invariant suites with a pass/fail table
  constants     print the dimension constants for a given n

Exit status is 0 iff every requested check passes.  The LICHLAB_WORKERS
environment variable selects the worker count (default 1, reproducible).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .harness import (
    load_config,
    run_instability_demo,
    run_sweep,
    run_verification_suite,
    worker_count,
    write_csv,
    write_json_summary,
)

__all__ = ["main"]


def _cmd_solve(args):
    from .conformal import normalize
    from .solver import solve_system

    cfg = load_config(args.config)
    C = normalize(cfg.base, h_override=cfg.h_override)
    sol = solve_system(C, cfg.solver)
    row = {
        "converged": sol.converged,
        "iterations": sol.iterations,
        "sup_u": float(np.max(sol.u.values)),
        "inf_u": float(np.min(sol.u.values)),
        "scalar_residual": sol.scalar_residual,
        "momentum_residual": sol.momentum_residual,
        "kernel_defect": sol.kernel_defect,
    }
    for key, val in row.items():
        print(f"{key} = {val}")
    if args.out:
        write_csv(args.out + ".csv", [row])
        write_json_summary(args.out + ".json",
                           "Converged" if sol.converged else "NotConverged",
                           cfg.config_hash())
    return 0 if sol.converged else 1


def _cmd_sweep(args):
    cfg = load_config(args.config)
    report = run_sweep(cfg)
    print(f"base regime: {report.base_regime}")
    for r in report.rows:
        print(f"alpha={r.alpha} eps={r.eps:.6g} sup_u={r.sup_u:.8f} "
              f"inf_u={r.inf_u:.8f} converged={r.converged} "
              f"diff_prev={r.diff_prev:.3e}")
    print(f"verdict: {report.verdict}")
    csv_path = args.out + ".csv" if args.out else cfg.csv_path
    json_path = args.out + ".json" if args.out else cfg.json_path
    if csv_path:
        write_csv(csv_path, report.rows)
    if json_path:
        write_json_summary(json_path, report.verdict, report.config_hash,
                           extra={"base_regime": report.base_regime,
                                  "note": report.note})
    ok = report.all_converged and report.verdict != "NonConvergent"
    return 0 if ok else 1


def _cmd_instability3(args):
    lambdas = [float(s) for s in args.lambdas.split(",")]
    rows = run_instability_demo(lambdas, resolution=args.resolution,
                                workers=worker_count())
    ok = True
    for r in rows:
        print(f"lambda={r['lambda']:.6g} sup_phi={r['sup_phi']:.8f} "
              f"closed_form={r['sup_phi_closed_form']:.8f} "
              f"scalar={r['scalar_residual']:.3e} "
              f"vector={r['vector_residual']:.3e}")
        ok = ok and r["scalar_residual"] < 1e-6 \
            and r["vector_residual"] < 1e-6 \
            and abs(r["sup_phi"] - r["sup_phi_closed_form"]) < 1e-6
    sups = [r["sup_phi"] for r in rows]       # rows sorted by decreasing lam
    ok = ok and all(a < b for a, b in zip(sups, sups[1:]))
    if args.out:
        write_csv(args.out + ".csv", rows)
        write_json_summary(args.out + ".json", "Pass" if ok else "Fail")
    print(f"blow-up demo: {'pass' if ok else 'fail'}")
    return 0 if ok else 1


def _cmd_verify(args):
    rows = run_verification_suite(args.select)
    width = max(len(r.name) for r in rows)
    for r in rows:
        status = "pass" if r.passed else "FAIL"
        print(f"{r.name:<{width}}  {r.group:<12} measured={r.measured:.3e} "
              f"tol={r.tolerance:.1e}  {status}")
    ok = all(r.passed for r in rows)
    if args.out:
        write_csv(args.out + ".csv", rows)
        write_json_summary(args.out + ".json", "Pass" if ok else "Fail")
    print(f"{sum(r.passed for r in rows)}/{len(rows)} checks passed")
    return 0 if ok else 1


def _cmd_constants(args):
    from .bubbles import blowup_constants

    c = blowup_constants(args.n)
    print(f"C1({args.n}) = {c.C1!r}")
    print(f"C2({args.n}) = {c.C2!r}")
    print(f"bubble_energy({args.n}) = {c.bubble_energy!r}")
    print(f"stability_coef({args.n}) = {c.stability_coef!r}")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="lichlab",
        description="Einstein-Lichnerowicz conformal constraint laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="one coupled solve from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="output path prefix")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("sweep", help="stability sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="output path prefix")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("instability3", help="round-sphere blow-up demo")
    p.add_argument("--lambdas", default="1.5,1.25,1.1,1.05,1.01")
    p.add_argument("--resolution", type=int, default=4096)
    p.add_argument("--out", default=None, help="output path prefix")
    p.set_defaults(func=_cmd_instability3)

    p = sub.add_parser("verify", help="module invariant suites")
    p.add_argument("--select", default=None,
                   help="restrict to one check group, e.g. green")
    p.add_argument("--out", default=None, help="output path prefix")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("constants", help="print dimension constants")
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=_cmd_constants)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
