"""Command-line entry point.

``fractau solve --config sweep.cfg`` runs the configured parameter sweep,
writes the CSV (plus summary figures), prints the grouped text table, and
optionally runs the dense spectral check suite on size-clamped versions of
the swept problems.

Exit codes: 0 when every run converged (and all requested checks passed),
2 when any run failed to converge, 1 on errors including failed checks.
"""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from .experiment import (
    ExperimentConfig,
    THREAD_ENV_VAR,
    load_config,
    render_table,
    run_sweep,
)

__all__ = ["main", "build_parser"]

# checks run on dense assemblies; clamp the swept sizes to stay tiny
_CHECK_N = 8
_CHECK_M = 7


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fractau",
        description=(
            "All-at-once solver benchmark for time-space fractional "
            "diffusion problems"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    solve = sub.add_parser(
        "solve",
        help="run a parameter sweep from a config file",
        description=(
            "Run the configured sweep. M values are interior grid points "
            f"per direction. The {THREAD_ENV_VAR} environment variable caps "
            "worker threads (default 1, keeping per-run timings honest)."
        ),
    )
    solve.add_argument("--config", required=True, help="sweep config file path")
    solve.add_argument(
        "--out",
        help="CSV output path (overrides the config's output entry)",
    )
    solve.add_argument(
        "--checks",
        action="store_true",
        help="also run the dense spectral check suite at clamped sizes",
    )
    solve.add_argument(
        "--solvers",
        help="comma-separated subset of os,ts,i (overrides the config)",
    )
    solve.add_argument(
        "--max-dense",
        type=int,
        default=None,
        help="size cap for the dense check assemblies (default 4096)",
    )
    solve.add_argument(
        "--no-figures",
        action="store_true",
        help="skip figure rendering even if the config enables it",
    )
    return parser


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    from dataclasses import replace

    updates: dict = {}
    if args.out:
        updates["output"] = args.out
    if args.solvers:
        updates["solvers"] = tuple(
            tag.strip().lower() for tag in args.solvers.split(",") if tag.strip()
        )
    if args.checks:
        updates["checks"] = True
    if args.no_figures:
        updates["figures"] = False
    if not cfg.output and "output" not in updates:
        updates["output"] = "fractau_sweep.csv"
    return replace(cfg, **updates) if updates else cfg


def _run_checks(cfg: ExperimentConfig, cap: int | None) -> bool:
    from .dense import DENSE_SIZE_CAP, run_theorem_checks
    from .experiment import benchmark_spec

    cap = cap if cap is not None else DENSE_SIZE_CAP
    all_passed = True
    for alpha in cfg.alphas:
        for beta1, beta2 in cfg.beta_pairs:
            spec = benchmark_spec(
                alpha,
                beta1,
                beta2,
                n_time=min(_CHECK_N, min(cfg.n_values)),
                m_interior=min(_CHECK_M, min(cfg.m_values)),
                scheme=cfg.scheme,
            )
            print(
                f"checks for (alpha, beta1, beta2) = "
                f"({alpha:g}, {beta1:g}, {beta2:g}) at "
                f"N={spec.n_time}, M={spec.m_space[0]}:"
            )
            reports, passed = run_theorem_checks(spec, cap=cap)
            for report in reports:
                print(f"  {report}")
            all_passed = all_passed and passed
    return all_passed


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _apply_overrides(load_config(args.config), args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    sample = cfg.m_values[0]
    print(
        f"interior points per direction M={sample} "
        f"(mesh width 1/{sample + 1}); time levels N in {list(cfg.n_values)}"
    )
    try:
        records = run_sweep(cfg, progress=print)
    except (OSError, ValueError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print()
    print(render_table(records))

    checks_ok = True
    if cfg.checks:
        print()
        try:
            checks_ok = _run_checks(cfg, args.max_dense)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        print(f"check suite: {'all passed' if checks_ok else 'FAILURES'}")

    if not checks_ok:
        return 1
    if any(not record.converged for record in records):
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
