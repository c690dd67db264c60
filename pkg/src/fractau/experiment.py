"""Benchmark driver: 2-D polynomial problem, parameter sweeps, CSV reports.

The benchmark problem lives on the unit square with unit diffusion
coefficients, zero initial data, and a forcing chosen so the exact solution
is the separable polynomial ``t**(alpha+1) x1^2 (1-x1)^2 x2^2 (1-x2)^2``.
``run_sweep`` drives the solvers over a parameter grid, timing each solve,
measuring the max-norm error against the exact solution, and writing one
CSV row per run (plus optional summary figures rendered next to the CSV).
"""

from __future__ import annotations

import concurrent.futures
import csv
import math
import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .gmres import (
    SolveReport,
    SolverConfig,
    solve_os,
    solve_ts,
    solve_unpreconditioned,
)
from .operators import AllAtOnceOperator, assemble_rhs
from .preconditioner import build_preconditioner
from .weights import ProblemSpec, SpatialScheme

__all__ = [
    "CSV_HEADER",
    "SOLVER_TAGS",
    "ExperimentConfig",
    "RunRecord",
    "example_2d_exact",
    "example_2d_forcing",
    "benchmark_spec",
    "solve_once",
    "run_sweep",
    "render_table",
    "parse_config_text",
    "load_config",
    "write_csv",
]

# column order is a stable contract for downstream diffing; do not reorder
CSV_HEADER = "alpha,beta1,beta2,N,M,solver,iters,cpu_seconds,error_inf,final_relres,converged"

SOLVER_TAGS = ("os", "ts", "i")
_SOLVER_ORDER = {tag: k for k, tag in enumerate(SOLVER_TAGS)}

THREAD_ENV_VAR = "FRACTAU_MAX_THREADS"


def example_2d_exact(x1, x2, t, alpha: float):
    """Exact solution of the 2-D benchmark, vectorized over all arguments."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    t = np.asarray(t, dtype=float)
    return t ** (alpha + 1.0) * (x1 * (1.0 - x1)) ** 2 * (x2 * (1.0 - x2)) ** 2


def _riesz_polynomial_image(x: np.ndarray, beta: float) -> np.ndarray:
    # image of x^2 (1-x)^2 under the two-sided fractional derivative pair,
    # before the -1/(2 cos(beta pi/2)) Riesz prefactor
    mirrored = 1.0 - x
    return (
        2.0 * (x ** (2.0 - beta) + mirrored ** (2.0 - beta)) / math.gamma(3.0 - beta)
        - 12.0 * (x ** (3.0 - beta) + mirrored ** (3.0 - beta)) / math.gamma(4.0 - beta)
        + 24.0 * (x ** (4.0 - beta) + mirrored ** (4.0 - beta)) / math.gamma(5.0 - beta)
    )


def example_2d_forcing(x1, x2, t, alpha: float, beta1: float, beta2: float):
    """Forcing of the 2-D benchmark, vectorized over all arguments.

    Three terms: the two spatial-derivative images of the exact solution
    (each carrying a ``t**(alpha+1) / (2 cos(beta pi/2))`` prefactor) plus
    the temporal-derivative image ``gamma(alpha+2) t`` times the spatial
    polynomial.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    t = np.asarray(t, dtype=float)
    poly1 = (x1 * (1.0 - x1)) ** 2
    poly2 = (x2 * (1.0 - x2)) ** 2
    t_power = t ** (alpha + 1.0)
    term1 = (
        t_power
        / (2.0 * math.cos(beta1 * math.pi / 2.0))
        * _riesz_polynomial_image(x1, beta1)
        * poly2
    )
    term2 = (
        t_power
        / (2.0 * math.cos(beta2 * math.pi / 2.0))
        * _riesz_polynomial_image(x2, beta2)
        * poly1
    )
    term3 = math.gamma(alpha + 2.0) * t * poly1 * poly2
    return term1 + term2 + term3


def benchmark_spec(
    alpha: float,
    beta1: float,
    beta2: float,
    n_time: int,
    m_interior: int,
    scheme: SpatialScheme | str = SpatialScheme.SHIFTED_GRUNWALD,
) -> ProblemSpec:
    """Problem specification of the 2-D benchmark on the unit square.

    ``m_interior`` is the number of interior grid points per direction, so
    the mesh width is ``1 / (m_interior + 1)``.
    """
    if isinstance(scheme, str):
        scheme = SpatialScheme.from_name(scheme)
    return ProblemSpec(
        alpha=alpha,
        beta=(beta1, beta2),
        c=(1.0, 1.0),
        bounds=((0.0, 1.0), (0.0, 1.0)),
        final_time=1.0,
        n_time=n_time,
        m_space=(m_interior, m_interior),
        scheme=scheme,
    )


@dataclass(frozen=True)
class RunRecord:
    """One solver run: parameters, iterations, timing, and error."""

    alpha: float
    beta1: float
    beta2: float
    n_time: int
    m_interior: int
    solver: str
    iterations: int
    cpu_seconds: float
    error_inf: float
    final_relres: float
    converged: bool

    def sort_key(self):
        return (
            self.alpha,
            self.beta1,
            self.beta2,
            self.n_time,
            self.m_interior,
            _SOLVER_ORDER.get(self.solver, len(SOLVER_TAGS)),
        )

    def csv_row(self) -> list[str]:
        return [
            f"{self.alpha:.17g}",
            f"{self.beta1:.17g}",
            f"{self.beta2:.17g}",
            str(self.n_time),
            str(self.m_interior),
            self.solver,
            str(self.iterations),
            f"{self.cpu_seconds:.6f}",
            f"{self.error_inf:.10e}",
            f"{self.final_relres:.10e}",
            "true" if self.converged else "false",
        ]


@dataclass(frozen=True)
class ExperimentConfig:
    """Sweep definition: parameter grid, solver list, output locations.

    The grid is the Cartesian product of ``alphas``, ``beta_pairs``,
    ``n_values`` (time levels N), and ``m_values`` (interior points per
    direction, matching the per-direction count labelled M in the reported
    tables).
    """

    alphas: tuple[float, ...]
    beta_pairs: tuple[tuple[float, float], ...]
    n_values: tuple[int, ...]
    m_values: tuple[int, ...]
    solvers: tuple[str, ...] = ("os", "ts")
    scheme: SpatialScheme = SpatialScheme.SHIFTED_GRUNWALD
    output: str | None = None
    checks: bool = False
    figures: bool = True
    restart: int = 20
    rel_tol: float = 1e-10
    max_iters: int = 10000
    fast_block_solve: bool = False

    def __post_init__(self) -> None:
        if not self.alphas or not self.beta_pairs:
            raise ValueError("alphas and betas must be nonempty")
        if not self.n_values or not self.m_values:
            raise ValueError("n_values and m_values must be nonempty")
        if not self.solvers:
            raise ValueError("solver list must be nonempty")
        for tag in self.solvers:
            if tag not in SOLVER_TAGS:
                raise ValueError(
                    f"unknown solver tag {tag!r}; expected one of {SOLVER_TAGS}"
                )
        for a in self.alphas:
            if not 0.0 < a < 1.0:
                raise ValueError(f"alpha must lie in (0, 1), got {a}")
        for pair in self.beta_pairs:
            if len(pair) != 2:
                raise ValueError(f"beta entries must be pairs, got {pair!r}")
            for b in pair:
                if not 1.0 < b < 2.0:
                    raise ValueError(f"beta must lie in (1, 2), got {b}")
        for n in (*self.n_values, *self.m_values):
            if n < 1:
                raise ValueError("N and M values must be positive")

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            restart=self.restart,
            rel_tol=self.rel_tol,
            max_iters=self.max_iters,
        )


def solve_once(
    spec: ProblemSpec,
    solver: str,
    config: SolverConfig | None = None,
    fast_block_solve: bool = False,
) -> tuple[RunRecord, SolveReport]:
    """Assemble and solve the 2-D benchmark once with the chosen solver.

    Assembly (operators, right-hand side, preconditioner) happens before
    the timed region; the recorded cpu_seconds covers the solve call only.
    """
    if solver not in SOLVER_TAGS:
        raise ValueError(f"unknown solver tag {solver!r}")
    if spec.dimension != 2:
        raise ValueError("the canned benchmark is two-dimensional")
    alpha = spec.alpha
    beta1, beta2 = spec.beta
    operator = AllAtOnceOperator.from_spec(spec)
    rhs = assemble_rhs(
        spec,
        lambda x1, x2, t: example_2d_forcing(x1, x2, t, alpha, beta1, beta2),
    )
    if solver == "i":
        report = solve_unpreconditioned(operator, rhs, config)
    else:
        prec = build_preconditioner(spec, fast_block_solve=fast_block_solve)
        runner = solve_os if solver == "os" else solve_ts
        report = runner(operator, prec, rhs, config)
    x1_arr, x2_arr = np.meshgrid(*spec.grids(), indexing="ij")
    exact = example_2d_exact(
        x1_arr[..., None], x2_arr[..., None], spec.time_levels(), alpha
    )
    error = float(np.max(np.abs(report.solution - exact.reshape(-1))))
    record = RunRecord(
        alpha=alpha,
        beta1=beta1,
        beta2=beta2,
        n_time=spec.n_time,
        m_interior=spec.m_space[0],
        solver=solver,
        iterations=report.iterations,
        cpu_seconds=report.wall_time,
        error_inf=error,
        final_relres=report.final_relres,
        converged=report.converged,
    )
    return record, report


def _worker_count(n_tasks: int) -> int:
    raw = os.environ.get(THREAD_ENV_VAR, "1")
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ValueError(
            f"{THREAD_ENV_VAR} must be an integer, got {raw!r}"
        ) from exc
    return max(1, min(cap, n_tasks))


def run_sweep(
    cfg: ExperimentConfig,
    progress: Callable[[str], None] | None = None,
) -> list[RunRecord]:
    """Run every (parameters, N, M, solver) combination of the sweep.

    Records are returned in deterministic sorted order.  When an output
    path is configured the CSV is written there, and summary figures are
    rendered next to it unless disabled.  Worker threads are capped by the
    FRACTAU_MAX_THREADS environment variable (default 1: runs share one
    process, and parallel solves would contaminate each other's timings).
    """
    say = progress or (lambda _msg: None)
    tasks = [
        (alpha, b1, b2, n, m, solver)
        for alpha in cfg.alphas
        for (b1, b2) in cfg.beta_pairs
        for n in cfg.n_values
        for m in cfg.m_values
        for solver in cfg.solvers
    ]
    tasks.sort(key=lambda t: t[:5] + (_SOLVER_ORDER[t[5]],))
    solver_cfg = cfg.solver_config()

    def run_task(task):
        alpha, b1, b2, n, m, solver = task
        spec = benchmark_spec(alpha, b1, b2, n, m, cfg.scheme)
        return solve_once(
            spec, solver, solver_cfg, fast_block_solve=cfg.fast_block_solve
        )

    results: list[tuple[RunRecord, SolveReport]] = []
    workers = _worker_count(len(tasks))
    if workers == 1:
        for task in tasks:
            result = run_task(task)
            results.append(result)
            say(_progress_line(result[0]))
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            for result in pool.map(run_task, tasks):
                results.append(result)
                say(_progress_line(result[0]))
    results.sort(key=lambda pair: pair[0].sort_key())
    records = [record for record, _ in results]
    if cfg.output:
        write_csv(records, cfg.output)
        say(f"wrote {cfg.output}")
        if cfg.figures:
            from .figures import render_figures

            histories = [report.residual_history for _, report in results]
            for path in render_figures(records, histories, cfg.output):
                say(f"wrote {path}")
    return records


def _progress_line(record: RunRecord) -> str:
    status = "converged" if record.converged else "NOT CONVERGED"
    return (
        f"({record.alpha:g}, {record.beta1:g}, {record.beta2:g}) "
        f"N={record.n_time} M={record.m_interior} {record.solver.upper():3s} "
        f"iters={record.iterations:<4d} err={record.error_inf:.2e} "
        f"cpu={record.cpu_seconds:.2f}s {status}"
    )


def write_csv(records: Sequence[RunRecord], path: str | Path) -> None:
    """Write run records to CSV with the stable column order."""
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_HEADER.split(","))
        for record in records:
            writer.writerow(record.csv_row())


def render_table(records: Sequence[RunRecord]) -> str:
    """Plain-text summary grouped by parameter triple, solvers side by side.

    Unconverged runs show "--" in the CPU column; their error and iteration
    cells still display the measured values.
    """
    if not records:
        raise ValueError("no records to render")
    solvers = sorted(
        {r.solver for r in records}, key=lambda s: _SOLVER_ORDER.get(s, 9)
    )
    by_key: dict = {}
    for r in records:
        by_key.setdefault(
            (r.alpha, r.beta1, r.beta2, r.n_time, r.m_interior), {}
        )[r.solver] = r
    header = f"{'(alpha, b1, b2)':<18s} {'N':>5s} {'M':>5s}"
    for tag in solvers:
        header += f" | {tag.upper() + ' error':>12s} {'iter':>5s} {'cpu(s)':>8s}"
    lines = [header, "-" * len(header)]
    previous_params = None
    for key in sorted(by_key):
        alpha, b1, b2, n, m = key
        params = f"({alpha:g}, {b1:g}, {b2:g})"
        shown = params if params != previous_params else ""
        previous_params = params
        line = f"{shown:<18s} {n:>5d} {m:>5d}"
        for tag in solvers:
            r = by_key[key].get(tag)
            if r is None:
                line += f" | {'':>12s} {'':>5s} {'':>8s}"
            else:
                cpu = f"{r.cpu_seconds:.2f}" if r.converged else "--"
                line += f" | {r.error_inf:>12.2e} {r.iterations:>5d} {cpu:>8s}"
        lines.append(line)
    return "\n".join(lines)


_LIST_KEYS = {"alphas", "betas", "n_values", "m_values", "solvers"}
_KEY_ALIASES = {
    "alpha": "alphas",
    "beta": "betas",
    "beta_pairs": "betas",
    "n": "n_values",
    "m": "m_values",
    "solver": "solvers",
    "out": "output",
}
_VALID_KEYS = {
    "alphas",
    "betas",
    "n_values",
    "m_values",
    "solvers",
    "scheme",
    "output",
    "checks",
    "figures",
    "restart",
    "rel_tol",
    "max_iters",
    "fast_block_solve",
}


def _split_top_level(text: str) -> list[str]:
    parts, depth, current = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise ValueError(f"unbalanced parentheses in {text!r}")
        if ch == "," and depth == 0:
            parts.append("".join(current).strip())
            current = []
        else:
            current.append(ch)
    if depth != 0:
        raise ValueError(f"unbalanced parentheses in {text!r}")
    tail = "".join(current).strip()
    if tail:
        parts.append(tail)
    return [p for p in parts if p]


def _parse_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {value!r}")


def _parse_beta_pair(token: str) -> tuple[float, float]:
    match = re.fullmatch(r"\(\s*([^\s,]+)\s*,\s*([^\s,)]+)\s*\)", token)
    if not match:
        raise ValueError(
            f"beta entries must look like (1.1, 1.9); got {token!r}"
        )
    return float(match.group(1)), float(match.group(2))


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse the flat key = value sweep configuration format.

    Lines starting with '#' (or inline '#' suffixes) are comments.  List
    values are comma separated; beta pairs are parenthesized.  See the
    annotated example configuration shipped with the package.
    """
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip().lower()
        key = _KEY_ALIASES.get(key, key)
        if key not in _VALID_KEYS:
            raise ValueError(
                f"line {lineno}: unknown key {key!r}; valid keys: "
                f"{sorted(_VALID_KEYS)}"
            )
        value = value.strip()
        if not value:
            raise ValueError(f"line {lineno}: empty value for {key!r}")
        values[key] = (lineno, value)

    def take(key, default=None):
        return values.pop(key, (0, default))[1]

    missing = [k for k in ("alphas", "betas", "n_values", "m_values") if k not in values]
    if missing:
        raise ValueError(f"missing required config keys: {missing}")
    alphas = tuple(float(v) for v in _split_top_level(take("alphas")))
    beta_pairs = tuple(_parse_beta_pair(v) for v in _split_top_level(take("betas")))
    n_values = tuple(int(v) for v in _split_top_level(take("n_values")))
    m_values = tuple(int(v) for v in _split_top_level(take("m_values")))
    kwargs: dict = {}
    if "solvers" in values:
        kwargs["solvers"] = tuple(
            v.lower() for v in _split_top_level(take("solvers"))
        )
    if "scheme" in values:
        kwargs["scheme"] = SpatialScheme.from_name(take("scheme"))
    if "output" in values:
        kwargs["output"] = take("output")
    for key, conv in (
        ("checks", _parse_bool),
        ("figures", _parse_bool),
        ("fast_block_solve", _parse_bool),
        ("restart", int),
        ("max_iters", int),
        ("rel_tol", float),
    ):
        if key in values:
            kwargs[key] = conv(take(key))
    return ExperimentConfig(
        alphas=alphas,
        beta_pairs=beta_pairs,
        n_values=n_values,
        m_values=m_values,
        **kwargs,
    )


def load_config(path: str | Path) -> ExperimentConfig:
    """Load an ExperimentConfig from a file."""
    return parse_config_text(Path(path).read_text())
