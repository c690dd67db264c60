"""Summary figures rendered next to the sweep CSV.

Three PNGs per sweep: preconditioned residual histories (semilog),
iteration counts across time-grid sizes, and max-norm errors across
time-grid sizes.  Rendering is headless (Agg) and file-only.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

import numpy as np  # noqa: E402

from .experiment import RunRecord  # noqa: E402

__all__ = ["render_figures"]

_SOLVER_STYLE = {"os": "-", "ts": "--", "i": ":"}


def _param_label(record: RunRecord) -> str:
    return f"({record.alpha:g}, {record.beta1:g}, {record.beta2:g})"


def _run_label(record: RunRecord) -> str:
    return (
        f"{_param_label(record)} N={record.n_time} "
        f"M={record.m_interior} {record.solver.upper()}"
    )


def _render_residuals(records, histories, path: Path) -> bool:
    pairs = [
        (record, history)
        for record, history in zip(records, histories)
        if history is not None and len(history) > 1
    ]
    if not pairs:
        return False
    fig, ax = plt.subplots(figsize=(7.0, 4.8))
    for record, history in pairs:
        scale = history[0] if history[0] > 0 else 1.0
        ax.semilogy(
            np.arange(len(history)),
            np.asarray(history) / scale,
            _SOLVER_STYLE.get(record.solver, "-"),
            linewidth=1.0,
            label=_run_label(record) if len(pairs) <= 12 else None,
        )
    ax.set_xlabel("iteration")
    ax.set_ylabel("relative preconditioned residual")
    ax.set_title("GMRES convergence")
    ax.grid(True, which="both", alpha=0.3)
    if len(pairs) <= 12:
        ax.legend(fontsize=7, loc="upper right")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return True


def _grouped_axes(records):
    groups: dict = {}
    for record in records:
        key = (_param_label(record), record.m_interior, record.solver)
        groups.setdefault(key, []).append(record)
    return groups


def _render_iterations(records, path: Path) -> bool:
    groups = _grouped_axes(records)
    if not groups:
        return False
    fig, ax = plt.subplots(figsize=(7.0, 4.8))
    for (label, m, solver), group in sorted(groups.items()):
        group = sorted(group, key=lambda r: r.n_time)
        ax.plot(
            [r.n_time for r in group],
            [r.iterations for r in group],
            _SOLVER_STYLE.get(solver, "-"),
            marker="o",
            markersize=3,
            linewidth=1.0,
            label=f"{label} M={m} {solver.upper()}" if len(groups) <= 12 else None,
        )
    ax.set_xscale("log", base=2)
    ax.set_xlabel("time levels N")
    ax.set_ylabel("iterations")
    ax.set_ylim(bottom=0)
    ax.set_title("iteration counts")
    ax.grid(True, alpha=0.3)
    if len(groups) <= 12:
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return True


def _render_errors(records, path: Path) -> bool:
    groups = _grouped_axes(records)
    if not groups:
        return False
    fig, ax = plt.subplots(figsize=(7.0, 4.8))
    for (label, m, solver), group in sorted(groups.items()):
        group = sorted(group, key=lambda r: r.n_time)
        ax.loglog(
            [r.n_time for r in group],
            [r.error_inf for r in group],
            _SOLVER_STYLE.get(solver, "-"),
            marker="o",
            markersize=3,
            linewidth=1.0,
            label=f"{label} M={m} {solver.upper()}" if len(groups) <= 12 else None,
        )
    ax.set_xlabel("time levels N")
    ax.set_ylabel("max-norm error")
    ax.set_title("errors vs temporal refinement")
    ax.grid(True, which="both", alpha=0.3)
    if len(groups) <= 12:
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return True


def render_figures(
    records: Sequence[RunRecord],
    histories: Sequence[np.ndarray | None],
    csv_path: str | Path,
) -> list[Path]:
    """Render the three summary figures next to the CSV output.

    Returns the paths actually written (a figure with nothing to show is
    skipped).
    """
    csv_path = Path(csv_path)
    stem = csv_path.with_suffix("")
    written = []
    targets = (
        (_render_residuals, Path(f"{stem}_residuals.png"), True),
        (_render_iterations, Path(f"{stem}_iterations.png"), False),
        (_render_errors, Path(f"{stem}_errors.png"), False),
    )
    for renderer, path, wants_history in targets:
        if wants_history:
            done = renderer(records, histories, path)
        else:
            done = renderer(records, path)
        if done:
            written.append(path)
    return written
