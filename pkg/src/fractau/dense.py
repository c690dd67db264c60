"""Dense reference assemblies and spectral verification checks.

This module is the package's measuring stick: every matrix-free operator
has an explicit dense counterpart here, built independently enough that
agreement is evidence rather than tautology.  On top of the assemblies sit
spectral checks that verify, with a dense eigensolver or SVD at small
sizes, the claims the preconditioner design rests on:

* the spatial weight matrix ``W`` is symmetric positive definite;
* the time-coupling matrix has positive definite symmetric part;
* the spectrum of ``tau(W)^{-1} W`` lies strictly inside (1/2, 3/2);
* the tau eigenvalue grid admits the mesh-independent lower bound built
  from scaled weight prefix sums;
* the generalized eigenvalues of the spatial matrix against its scaled tau
  approximation lie in [sqrt(3)/3, sqrt(3)];
* the two-sided preconditioned system has condition number at most
  ``nu(eta)``, minimized at eta = sqrt(3)/2 where the bound equals 3.

Everything here is test/diagnostic support with hard size caps; nothing is
used in the solve hot path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np
import scipy.linalg

from .operators import TemporalOperator
from .preconditioner import (
    ETA_DEFAULT,
    SineTransformPlan,
    TauPreconditioner,
    build_preconditioner,
    tau_eigenvalues,
)
from .weights import (
    ProblemSpec,
    SpatialWeights,
    direction_weights,
    l1_weights,
    spatial_weights,
    verify_weight_properties,
)

__all__ = [
    "DENSE_SIZE_CAP",
    "dense_W",
    "dense_hankel_correction",
    "dense_tau",
    "dense_temporal",
    "dense_spatial",
    "dense_spatial_tau",
    "dense_A",
    "dense_P",
    "dense_Pl",
    "dense_Pr",
    "kappa_bound",
    "SpectrumReport",
    "ConditionReport",
    "LowerBoundReport",
    "DefinitenessReport",
    "EquivalenceReport",
    "check_spectrum_inclusion",
    "check_condition_number",
    "check_c_lower_bound",
    "check_weight_matrix_definite",
    "check_temporal_definite",
    "check_tau_equivalence",
    "run_theorem_checks",
]

# dense assemblies refuse to allocate past this many unknowns
DENSE_SIZE_CAP = 4096
# strictness margin when asserting open-interval spectrum inclusion
SPECTRUM_MARGIN = 1e-10
# multiplicative slack on the condition-number bound (SVD roundoff)
KAPPA_SLACK = 1e-8
# multiplicative slack on the eigenvalue-grid lower bound
C_BOUND_SLACK = 1e-12
# relative slack on the closed equivalence interval endpoints
EQUIVALENCE_SLACK = 1e-10


def _check_cap(size: int, cap: int) -> None:
    if size > cap:
        raise ValueError(
            f"dense assembly of size {size} exceeds the cap {cap}; "
            "raise the cap explicitly if the memory cost is intended"
        )


def _weight_array(w: SpatialWeights | np.ndarray, m: int) -> np.ndarray:
    arr = w.w if isinstance(w, SpatialWeights) else np.asarray(w, dtype=float)
    if m < 1:
        raise ValueError("m must be at least 1")
    if arr.size < m:
        raise ValueError(f"need at least {m} weights, got {arr.size}")
    return arr[:m]


def dense_W(w: SpatialWeights | np.ndarray, m: int) -> np.ndarray:
    """Dense symmetric Toeplitz matrix of the spatial weights."""
    col = _weight_array(w, m)
    return scipy.linalg.toeplitz(col)


def dense_hankel_correction(w: SpatialWeights | np.ndarray, m: int) -> np.ndarray:
    """Dense Hankel correction H with first column (w_2,...,w_{m-1},0,0).

    Entry (i,j) in 1-based indexing is w_{i+j} when i+j <= m-1, the
    mirrored weight w_{2m+2-(i+j)} when i+j >= m+3, and zero on the two
    central anti-diagonals.  For m <= 2 no index satisfies either
    condition and H = 0.
    """
    col = _weight_array(w, m)
    idx = np.arange(1, m + 1)
    s = idx[:, None] + idx[None, :]
    low = np.clip(s, 0, m - 1)
    high = np.clip(2 * m + 2 - s, 0, m - 1)
    out = np.where(s <= m - 1, col[low], 0.0)
    out = np.where(s >= m + 3, col[high], out)
    return out


def dense_tau(w: SpatialWeights | np.ndarray, m: int) -> np.ndarray:
    """Dense tau approximation: Toeplitz minus Hankel correction."""
    return dense_W(w, m) - dense_hankel_correction(w, m)


def dense_temporal(temporal: TemporalOperator | np.ndarray) -> np.ndarray:
    """Dense lower-triangular Toeplitz time-coupling matrix."""
    col = (
        temporal.first_column
        if isinstance(temporal, TemporalOperator)
        else np.asarray(temporal, dtype=float)
    )
    return scipy.linalg.toeplitz(col, np.zeros(col.size))


def _kron_chain(mats: Sequence[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, mats)


def _direction_kron(
    per_direction: Sequence[np.ndarray], m_space: Sequence[int], scales: Sequence[float]
) -> np.ndarray:
    total = int(np.prod(m_space))
    out = np.zeros((total, total))
    for i, (mat, scale) in enumerate(zip(per_direction, scales)):
        mats = [np.eye(m) for m in m_space]
        mats[i] = mat
        out += scale * _kron_chain(mats)
    return out


def dense_spatial(
    spec: ProblemSpec, weights: Sequence[SpatialWeights] | None = None
) -> np.ndarray:
    """Dense spatial Kronecker sum ``sum_i eta_i I (x) W_i (x) I``."""
    if weights is None:
        weights = direction_weights(spec)
    mats = [dense_W(w, m) for w, m in zip(weights, spec.m_space)]
    return _direction_kron(mats, spec.m_space, spec.eta)


def dense_spatial_tau(
    spec: ProblemSpec,
    weights: Sequence[SpatialWeights] | None = None,
    eta: float = ETA_DEFAULT,
) -> np.ndarray:
    """Dense scaled tau approximation of the spatial Kronecker sum."""
    if weights is None:
        weights = direction_weights(spec)
    mats = [dense_tau(w, m) for w, m in zip(weights, spec.m_space)]
    return eta * _direction_kron(mats, spec.m_space, spec.eta)


def dense_A(
    spec: ProblemSpec,
    weights: Sequence[SpatialWeights] | None = None,
    temporal: TemporalOperator | None = None,
    cap: int = DENSE_SIZE_CAP,
) -> np.ndarray:
    """Dense all-at-once matrix in the space-major layout.

    With J spatial and N temporal unknowns this is
    ``kron(I_J, T) + kron(B, I_N)``: time indices vary fastest, matching
    the matrix-free vector layout.
    """
    _check_cap(spec.total_unknowns, cap)
    if temporal is None:
        temporal = TemporalOperator(
            l1_weights(spec.alpha, spec.n_time, spec.mu).l
        )
    t_mat = dense_temporal(temporal)
    b_mat = dense_spatial(spec, weights)
    return np.kron(np.eye(b_mat.shape[0]), t_mat) + np.kron(
        b_mat, np.eye(t_mat.shape[0])
    )


def _dense_sine(m_space: Sequence[int]) -> np.ndarray:
    return _kron_chain([SineTransformPlan(m).matrix() for m in m_space])


def _dense_tau_power(p: TauPreconditioner, power: float) -> np.ndarray:
    s_mat = _dense_sine(p.m_space)
    return s_mat @ np.diag(p.lambda_tilde**power) @ s_mat


def dense_P(p: TauPreconditioner, cap: int = DENSE_SIZE_CAP) -> np.ndarray:
    """Dense single-sided preconditioner ``kron(I_J, T) + kron(B_tau, I_N)``."""
    _check_cap(p.size, cap)
    t_mat = dense_temporal(p.temporal)
    b_tau = _dense_tau_power(p, 1.0)
    return np.kron(np.eye(p.n_space), t_mat) + np.kron(b_tau, np.eye(p.n_time))


def dense_Pl(p: TauPreconditioner, cap: int = DENSE_SIZE_CAP) -> np.ndarray:
    """Dense left factor ``kron(B_tau^{-1/2}, T) + kron(B_tau^{1/2}, I_N)``."""
    _check_cap(p.size, cap)
    t_mat = dense_temporal(p.temporal)
    return np.kron(_dense_tau_power(p, -0.5), t_mat) + np.kron(
        _dense_tau_power(p, 0.5), np.eye(p.n_time)
    )


def dense_Pr(p: TauPreconditioner, cap: int = DENSE_SIZE_CAP) -> np.ndarray:
    """Dense right factor ``kron(B_tau^{1/2}, I_N)``."""
    _check_cap(p.size, cap)
    return np.kron(_dense_tau_power(p, 0.5), np.eye(p.n_time))


def kappa_bound(eta: float) -> float:
    """Condition-number bound nu(eta) for the two-sided preconditioner.

    nu(eta) = sqrt(3 max{1/(2 eta), 2 eta, 1} / min{1/(2 eta), 2 eta/3, 1});
    minimized at eta = sqrt(3)/2 where it equals 3.
    """
    if eta <= 0.0:
        raise ValueError("eta must be positive")
    numer = max(1.0 / (2.0 * eta), 2.0 * eta, 1.0)
    denom = min(1.0 / (2.0 * eta), 2.0 * eta / 3.0, 1.0)
    return math.sqrt(3.0 * numer / denom)


def _verdict(passed: bool) -> str:
    return "PASS" if passed else "FAIL"


@dataclass(frozen=True)
class SpectrumReport:
    """Eigenvalue range of tau(W)^{-1} W against the open interval (1/2, 3/2)."""

    scheme: str
    beta: float
    m: int
    min_eigenvalue: float
    max_eigenvalue: float
    margin: float = SPECTRUM_MARGIN

    @property
    def passed(self) -> bool:
        return (
            self.min_eigenvalue >= 0.5 + self.margin
            and self.max_eigenvalue <= 1.5 - self.margin
        )

    def __str__(self) -> str:
        return (
            f"spectrum inclusion  scheme={self.scheme:<17s} beta={self.beta:.2f} "
            f"m={self.m:<4d} eigs in [{self.min_eigenvalue:.12f}, "
            f"{self.max_eigenvalue:.12f}] target (0.5, 1.5): "
            f"{_verdict(self.passed)}"
        )


def check_spectrum_inclusion(
    w: SpatialWeights, m: int | None = None
) -> SpectrumReport:
    """Verify the spectrum of tau(W)^{-1} W lies strictly inside (1/2, 3/2).

    Solves the dense symmetric-definite generalized eigenproblem
    ``W v = mu tau(W) v``; the preconditioner's per-direction clustering
    rests on exactly this inclusion.
    """
    if m is None:
        m = w.w.size
    if m > 512:
        raise ValueError("spectrum check capped at m = 512")
    eigs = scipy.linalg.eigh(
        dense_W(w, m), dense_tau(w, m), eigvals_only=True
    )
    return SpectrumReport(
        scheme=w.scheme.value,
        beta=w.beta,
        m=m,
        min_eigenvalue=float(eigs[0]),
        max_eigenvalue=float(eigs[-1]),
    )


@dataclass(frozen=True)
class ConditionReport:
    """Measured kappa_2 of the two-sided preconditioned matrix vs nu(eta)."""

    eta: float
    kappa: float
    bound: float
    sigma_max: float
    sigma_min: float
    size: int
    slack: float = KAPPA_SLACK

    @property
    def passed(self) -> bool:
        return self.kappa <= self.bound * (1.0 + self.slack)

    def __str__(self) -> str:
        return (
            f"condition number    eta={self.eta:.4f} size={self.size:<5d} "
            f"kappa={self.kappa:.6f} <= nu(eta)={self.bound:.6f}: "
            f"{_verdict(self.passed)}"
        )


def check_condition_number(
    spec: ProblemSpec,
    weights: Sequence[SpatialWeights] | None = None,
    temporal: TemporalOperator | None = None,
    eta: float = ETA_DEFAULT,
    cap: int = DENSE_SIZE_CAP,
) -> ConditionReport:
    """Verify kappa_2(Pl^{-1} A Pr^{-1}) <= nu(eta) by dense SVD."""
    _check_cap(spec.total_unknowns, cap)
    if weights is None:
        weights = direction_weights(spec)
    if temporal is None:
        temporal = TemporalOperator(l1_weights(spec.alpha, spec.n_time, spec.mu).l)
    prec = build_preconditioner(spec, weights, temporal, eta=eta)
    a_mat = dense_A(spec, weights, temporal, cap=cap)
    left = scipy.linalg.solve(dense_Pl(prec, cap=cap), a_mat)
    both = scipy.linalg.solve(dense_Pr(prec, cap=cap).T, left.T).T
    sigma = scipy.linalg.svdvals(both)
    return ConditionReport(
        eta=eta,
        kappa=float(sigma[0] / sigma[-1]),
        bound=kappa_bound(eta),
        sigma_max=float(sigma[0]),
        sigma_min=float(sigma[-1]),
        size=spec.total_unknowns,
    )


@dataclass(frozen=True)
class LowerBoundReport:
    """Mesh-independent lower bound on the tau eigenvalue grid."""

    c_check: float
    lambda_min: float
    horizon: int
    prefix_argmins: tuple[int, ...]
    slack: float = C_BOUND_SLACK

    @property
    def passed(self) -> bool:
        return self.c_check > 0.0 and self.lambda_min >= self.c_check * (
            1.0 - self.slack
        )

    def __str__(self) -> str:
        return (
            f"eigen grid bound    lambda_min={self.lambda_min:.6e} >= "
            f"c_check={self.c_check:.6e} (horizon {self.horizon}, "
            f"argmins {self.prefix_argmins}): {_verdict(self.passed)}"
        )


def check_c_lower_bound(
    spec: ProblemSpec,
    weights: Sequence[SpatialWeights] | None = None,
    eta: float = ETA_DEFAULT,
    horizon: int = 4096,
) -> LowerBoundReport:
    """Verify min(lambda_tilde) >= c_check > 0.

    c_check sums, over directions, the horizon minimum of the scaled weight
    prefix sums divided by the domain width raised to beta.  The infimum
    surrogate is taken over prefix lengths up to ``horizon``; the scaled
    prefix sequence is monotone-convergent for all three schemes, so the
    horizon minimum is a faithful stand-in recorded with its location.
    """
    if weights is None:
        weights = direction_weights(spec)
    c_check = 0.0
    argmins = []
    for w, (lo, hi), beta, c_i in zip(weights, spec.bounds, spec.beta, spec.c):
        long = spatial_weights(w.scheme, beta, max(horizon, w.w.size))
        report = verify_weight_properties(long)
        argmins.append(report.prefix_argmin)
        c_check += c_i * report.prefix_min / (hi - lo) ** beta
    c_check *= eta
    per_direction = [
        eta_i * tau_eigenvalues(w, m).min()
        for w, m, eta_i in zip(weights, spec.m_space, spec.eta)
    ]
    lambda_min = eta * sum(per_direction)
    return LowerBoundReport(
        c_check=float(c_check),
        lambda_min=float(lambda_min),
        horizon=horizon,
        prefix_argmins=tuple(argmins),
    )


@dataclass(frozen=True)
class DefinitenessReport:
    """Positive definiteness witness: smallest eigenvalue of a symmetric matrix."""

    label: str
    min_eigenvalue: float
    size: int

    @property
    def passed(self) -> bool:
        return self.min_eigenvalue > 0.0

    def __str__(self) -> str:
        return (
            f"definiteness        {self.label:<28s} size={self.size:<5d} "
            f"min eig={self.min_eigenvalue:.6e} > 0: {_verdict(self.passed)}"
        )


def check_weight_matrix_definite(
    w: SpatialWeights, m: int | None = None
) -> DefinitenessReport:
    """Smallest eigenvalue of the dense weight Toeplitz matrix."""
    if m is None:
        m = w.w.size
    eigs = scipy.linalg.eigvalsh(dense_W(w, m))
    return DefinitenessReport(
        label=f"W[{w.scheme.value}, beta={w.beta:.2f}]",
        min_eigenvalue=float(eigs[0]),
        size=m,
    )


def check_temporal_definite(
    temporal: TemporalOperator | np.ndarray,
) -> DefinitenessReport:
    """Smallest eigenvalue of T + T^t for the time-coupling matrix."""
    t_mat = dense_temporal(temporal)
    eigs = scipy.linalg.eigvalsh(t_mat + t_mat.T)
    return DefinitenessReport(
        label="T + T^t",
        min_eigenvalue=float(eigs[0]),
        size=t_mat.shape[0],
    )


@dataclass(frozen=True)
class EquivalenceReport:
    """Generalized eigenvalues of (B, B_tau) against [sqrt(3)/3, sqrt(3)]."""

    min_eigenvalue: float
    max_eigenvalue: float
    size: int
    slack: float = EQUIVALENCE_SLACK

    @property
    def lower(self) -> float:
        return math.sqrt(3.0) / 3.0

    @property
    def upper(self) -> float:
        return math.sqrt(3.0)

    @property
    def passed(self) -> bool:
        return (
            self.min_eigenvalue >= self.lower * (1.0 - self.slack)
            and self.max_eigenvalue <= self.upper * (1.0 + self.slack)
        )

    def __str__(self) -> str:
        return (
            f"spectral equivalence size={self.size:<5d} gen-eigs in "
            f"[{self.min_eigenvalue:.12f}, {self.max_eigenvalue:.12f}] "
            f"target [{self.lower:.12f}, {self.upper:.12f}]: "
            f"{_verdict(self.passed)}"
        )


def check_tau_equivalence(
    spec: ProblemSpec,
    weights: Sequence[SpatialWeights] | None = None,
    cap: int = DENSE_SIZE_CAP,
) -> EquivalenceReport:
    """Verify sqrt(3)/3 B_tau <= B <= sqrt(3) B_tau (canonical scaling).

    Solves the generalized symmetric-definite eigenproblem for the pencil
    (B, B_tau) at eta = sqrt(3)/2; the matrix inequality pair is exactly
    the statement that all generalized eigenvalues lie in the closed
    interval [sqrt(3)/3, sqrt(3)].
    """
    _check_cap(spec.n_space, cap)
    if weights is None:
        weights = direction_weights(spec)
    b_mat = dense_spatial(spec, weights)
    b_tau = dense_spatial_tau(spec, weights, eta=ETA_DEFAULT)
    eigs = scipy.linalg.eigh(b_mat, b_tau, eigvals_only=True)
    return EquivalenceReport(
        min_eigenvalue=float(eigs[0]),
        max_eigenvalue=float(eigs[-1]),
        size=b_mat.shape[0],
    )


def run_theorem_checks(
    spec: ProblemSpec,
    etas: Sequence[float] = (0.5, ETA_DEFAULT, 1.0, 2.0),
    cap: int = DENSE_SIZE_CAP,
) -> tuple[list, bool]:
    """Run the full spectral check suite on one problem specification.

    Returns the report list and the aggregate verdict.  Sizes are capped;
    pass a small specification (the CLI clamps N and m before calling).
    """
    _check_cap(spec.total_unknowns, cap)
    weights = direction_weights(spec)
    temporal = TemporalOperator(l1_weights(spec.alpha, spec.n_time, spec.mu).l)
    reports: list = []
    for w, m in zip(weights, spec.m_space):
        reports.append(check_weight_matrix_definite(w, m))
        reports.append(check_spectrum_inclusion(w, m))
    reports.append(check_temporal_definite(temporal))
    reports.append(check_c_lower_bound(spec, weights))
    reports.append(check_tau_equivalence(spec, weights, cap=cap))
    for eta in etas:
        reports.append(
            check_condition_number(spec, weights, temporal, eta=eta, cap=cap)
        )
    return reports, all(r.passed for r in reports)
