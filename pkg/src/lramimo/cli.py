"""Command-line front end: simulate, equiv-suite, compare-reduction."""

import argparse
import json
import sys
from dataclasses import replace

from . import checks
from .sim import SimConfig, compare_reduction_targets, emit_results, run_monte_carlo


def _load_config(path: str) -> SimConfig:
    with open(path) as fh:
        data = json.load(fh)
    return SimConfig.from_dict(data)


def _cmd_simulate(args) -> int:
    config = _load_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    result = run_monte_carlo(config, workers=args.workers)
    emit_results(result, args.out)
    for p in result.points:
        print(
            f"{p.spec_id:24s} snr={p.snr_db:6.2f} dB  symbols={p.symbols:10d}  "
            f"errors={p.errors:8d}  ser={p.ser:.6e} +- {p.ci95:.2e}"
        )
    clipped = {k: v for k, v in result.clipped.items() if v}
    if clipped:
        print(f"clipped decisions: {clipped}")
    print(f"wrote {args.out} ({result.meta['wall_clock_s']:.1f} s)")
    return 0


def _cmd_equiv_suite(args) -> int:
    report = checks.equivalence_suite(n_instances=args.instances, seed=args.seed)
    rows = [
        ("step feedforward residual", report.feedforward, checks.FF_TOL),
        ("step feedback residual", report.feedback, checks.FB_TOL),
        ("order mismatches", report.order_mismatches, 0),
        ("conditional-precision residual", report.schur, checks.SCHUR_TOL),
        ("fast factorization residual", report.fast_filters, checks.FAST_TOL),
        ("fast order mismatches", report.fast_order_mismatches, 0),
        ("MMSE receive-form residual", report.mmse_le_forms, checks.MMSE_FORMS_TOL),
    ]
    ok = report.within()
    for name, value, tol in rows:
        if isinstance(value, int):
            line = f"{name:32s} {value:12d}  (allowed {tol})"
        else:
            line = f"{name:32s} {value:12.3e}  (allowed {tol:.0e})"
        print(line)
    print("equivalence suite:", "PASS" if ok else "FAIL")
    return 0 if ok else 1


def _cmd_compare_reduction(args) -> int:
    config = _load_config(args.config)
    comparison = compare_reduction_targets(config, workers=args.workers)
    if args.out:
        emit_results(comparison.result, args.out)
    print("SER delta (reduce original matrix minus reduce augmented matrix):")
    for d in comparison.deltas:
        print(
            f"  snr={d.snr_db:6.2f} dB  original={d.ser_original:.6e}  "
            f"augmented={d.ser_augmented:.6e}  delta={d.delta:+.6e} +- {d.ci95:.2e}"
        )
    if args.out:
        print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lramimo",
        description="Lattice-reduction-aided MIMO equalization simulations",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a Monte-Carlo SER sweep")
    p_sim.add_argument("--config", required=True, help="JSON config file")
    p_sim.add_argument("--out", default="results.csv", help="output CSV path")
    p_sim.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_sim.add_argument("--workers", type=int, default=1, help="parallel trial workers")
    p_sim.set_defaults(func=_cmd_simulate)

    p_eq = sub.add_parser(
        "equiv-suite",
        help="verify successive augmented-matrix filters against closed forms",
    )
    p_eq.add_argument("--instances", type=int, default=1000)
    p_eq.add_argument("--seed", type=int, default=20260823)
    p_eq.set_defaults(func=_cmd_equiv_suite)

    p_cmp = sub.add_parser(
        "compare-reduction",
        help="paired run of original- vs augmented-matrix reduction targets",
    )
    p_cmp.add_argument("--config", required=True, help="JSON config file")
    p_cmp.add_argument("--out", default=None, help="optional output CSV path")
    p_cmp.add_argument("--workers", type=int, default=1)
    p_cmp.set_defaults(func=_cmd_compare_reduction)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
