"""Sine-transform (tau-algebra) preconditioner for the all-at-once system.

The preconditioner replaces the spatial Kronecker sum B by its tau-algebra
approximation: each symmetric Toeplitz factor W is projected onto the
algebra of matrices diagonalized by the orthonormal discrete sine transform
(DST-I) by subtracting a Hankel correction.  The result,

    B_tau = eta_factor * sum_i eta_i I (x) tau(W_i) (x) I,

is diagonalized by the d-dimensional DST with an explicitly known positive
eigenvalue grid ``lambda_tilde``, so the single-sided preconditioner

    P = I_J (x) T + B_tau (x) I_N

is applied matrix-free in three stages: DST across space, J independent
shifted lower-triangular Toeplitz solves (T + lambda_tilde_i I) x = b, DST
across space again.  The two-sided split P = P_l P_r with
P_r = B_tau^{1/2} (x) I_N is available for comparison runs; its square-root
scalings are precomputed at build time.

The default scaling ``eta_factor = sqrt(3)/2`` minimizes the two-sided
condition-number bound; other positive values are accepted for experiments.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
import scipy.fft

from .operators import TemporalOperator
from .weights import ProblemSpec, SpatialWeights

__all__ = [
    "ETA_DEFAULT",
    "SineTransformPlan",
    "dst",
    "tau_eigenvalues",
    "tau_first_column",
    "TauPreconditioner",
    "build_preconditioner",
    "block_lower_toeplitz_solve",
    "solve_shifted_blocks",
    "fast_shifted_block_inverse_columns",
]

# minimizer of the two-sided condition-number bound
ETA_DEFAULT = math.sqrt(3.0) / 2.0

# the FFT behind a size-m DST-I works on the odd extension of length
# 2*(m + 1); when m + 1 carries a prime factor beyond the fast radix set the
# generic fallback is several times slower per point, and up to this size a
# cached orthogonal-matrix multiply wins
_FAST_RADIX_LIMIT = 11
_MATMUL_SIZE_LIMIT = 512


def _largest_prime_factor(n: int) -> int:
    largest = 1
    p = 2
    while p * p <= n:
        while n % p == 0:
            largest = p
            n //= p
        p += 1
    return max(largest, n) if n > 1 else largest


class SineTransformPlan:
    """Orthonormal DST-I of size m.

    The transform matrix has entries ``sqrt(2/(m+1)) * sin(pi*j*k/(m+1))``
    (1-based j, k); it is real, symmetric and orthogonal, hence an
    involution: applying it twice recovers the input.  Sizes whose odd
    extension is FFT-unfriendly are planned as a cached matrix multiply
    instead; both routes evaluate the same orthogonal map.
    """

    def __init__(self, m: int):
        if m < 1:
            raise ValueError("transform size must be at least 1")
        self.m = int(m)
        self.normalization = math.sqrt(2.0 / (self.m + 1))
        self._matrix = None
        if (
            self.m <= _MATMUL_SIZE_LIMIT
            and _largest_prime_factor(self.m + 1) > _FAST_RADIX_LIMIT
        ):
            self._matrix = self.matrix()

    def apply(self, v: np.ndarray, axis: int = -1) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape[axis] != self.m:
            raise ValueError(
                f"axis {axis} has length {v.shape[axis]}, expected {self.m}"
            )
        if self._matrix is not None:
            out = np.tensordot(self._matrix, v, axes=([1], [axis]))
            return np.moveaxis(out, 0, axis)
        return scipy.fft.dst(v, type=1, axis=axis, norm="ortho")

    def matrix(self) -> np.ndarray:
        """The explicit m-by-m transform matrix."""
        j = np.arange(1, self.m + 1)
        return self.normalization * np.sin(
            np.pi * np.outer(j, j) / (self.m + 1)
        )


def dst(plan: SineTransformPlan, v: np.ndarray) -> np.ndarray:
    """Functional alias for :meth:`SineTransformPlan.apply` on vectors."""
    return plan.apply(v, axis=-1)


def tau_first_column(w: np.ndarray, m: int) -> np.ndarray:
    """First column of the tau-algebra projection of the symmetric Toeplitz.

    Subtracting the Hankel correction only changes the first column entries
    0..m-3 (0-based), which lose the weight two places further out.
    """
    w = np.asarray(w, dtype=float)
    if w.size < m:
        raise ValueError(f"need at least {m} weights, got {w.size}")
    col = w[:m].copy()
    if m > 2:
        col[: m - 2] -= w[2:m]
    return col


def tau_eigenvalues(w: SpatialWeights, m: int, method: str = "fst") -> np.ndarray:
    """Eigenvalues of the tau-algebra projection of the m-by-m weight Toeplitz.

    Parameters
    ----------
    w : SpatialWeights
        Weight sequence of length >= m.
    m : int
        Matrix size.
    method : {"fst", "cosine"}
        "fst" evaluates the eigenvalues as the elementwise ratio of the sine
        transform of the projected first column to the transform of e_1;
        "cosine" evaluates the defining cosine sums directly.  The two paths
        are independent and agree to roundoff; "cosine" costs O(m^2) and is
        kept as a cross-check.

    Returns
    -------
    ndarray of shape (m,)
        Eigenvalue q_i belonging to the i-th sine-vector, i = 1..m.  All
        positive for weight sequences passing the sign/prefix checks.
    """
    weights = np.asarray(w.w, dtype=float)
    if weights.size < m:
        raise ValueError(f"need at least {m} weights, got {weights.size}")
    if method == "fst":
        plan = SineTransformPlan(m)
        numerator = plan.apply(tau_first_column(weights, m))
        i = np.arange(1, m + 1)
        denominator = plan.normalization * np.sin(np.pi * i / (m + 1))
        return numerator / denominator
    if method == "cosine":
        i = np.arange(1, m + 1)
        if m == 1:
            return np.array([weights[0]])
        k = np.arange(1, m)
        cosines = np.cos(np.pi * np.outer(i, k) / (m + 1))
        return weights[0] + 2.0 * cosines @ weights[1:m]
    raise ValueError(f"unknown method {method!r}")


def _toeplitz_history_block(l: np.ndarray, r0: int, r1: int) -> np.ndarray:
    # dense block rows r0..r1-1, columns 0..r0-1 of the lower Toeplitz:
    # entry (i, k) = l[r0 + i - k]
    import scipy.linalg

    return scipy.linalg.toeplitz(l[r0:r1], l[r0:0:-1])


def solve_shifted_blocks(
    first_column: np.ndarray,
    shifts: np.ndarray,
    rhs: np.ndarray,
    block: int = 64,
) -> np.ndarray:
    """Solve (T + shift_j I) x_j = rhs_j for a batch of shifts at once.

    T is the shared lower-triangular Toeplitz matrix with the given first
    column; ``rhs`` has shape (J, N), one row per shift.  Forward
    substitution, organized so that the coupling to already-computed levels
    is applied in Toeplitz blocks via matrix products (level-3 BLAS) while
    only the short within-block recurrence runs level-1.

    Deterministic: the reduction order inside every row is fixed by the
    blocking, independent of any threading in the underlying BLAS batch
    dimension.
    """
    l = np.ascontiguousarray(first_column, dtype=float)
    n = l.size
    rhs = np.asarray(rhs, dtype=float)
    if rhs.ndim != 2 or rhs.shape[1] != n:
        raise ValueError(f"rhs must have shape (J, {n})")
    shifts = np.asarray(shifts, dtype=float)
    if shifts.shape != (rhs.shape[0],):
        raise ValueError("need exactly one shift per right-hand side row")
    if np.any(shifts <= 0.0):
        raise ValueError("shifts must be positive")
    diag = l[0] + shifts
    work = rhs.copy()
    x = np.empty_like(work)
    lrev = l[::-1]
    for r0 in range(0, n, block):
        r1 = min(r0 + block, n)
        if r0 > 0:
            work[:, r0:r1] -= x[:, :r0] @ _toeplitz_history_block(l, r0, r1).T
        x[:, r0] = work[:, r0] / diag
        for j in range(r0 + 1, r1):
            coupling = x[:, r0:j] @ lrev[n - 1 - (j - r0) : n - 1]
            x[:, j] = (work[:, j] - coupling) / diag
    return x


def block_lower_toeplitz_solve(
    temporal: TemporalOperator, shift: float, rhs: np.ndarray
) -> np.ndarray:
    """Solve (T + shift I) x = rhs for a single positive shift.

    Exact forward substitution; the positive shift keeps the diagonal
    strictly positive (nonpositive shifts indicate corrupted upstream data
    and are rejected).
    """
    if shift <= 0.0:
        raise ValueError(f"shift must be positive, got {shift}")
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != (temporal.n,):
        raise ValueError(f"expected shape ({temporal.n},), got {rhs.shape}")
    return solve_shifted_blocks(
        temporal.first_column, np.array([float(shift)]), rhs[None, :]
    )[0]


def fast_shifted_block_inverse_columns(
    first_column: np.ndarray, shifts: np.ndarray
) -> np.ndarray:
    """First columns of (T + shift_j I)^{-1} for all shifts, by doubling.

    The inverse of a lower-triangular Toeplitz matrix is again
    lower-triangular Toeplitz, so its first column determines it.  Doubling
    builds the column for the leading 2n-by-2n block from the n-by-n one
    with two Toeplitz products per step (O(N log^2 N) total via FFT).  The
    off-diagonal kernel is shared across the batch because the shifts only
    move the diagonal.
    """
    l = np.ascontiguousarray(first_column, dtype=float)
    n = l.size
    shifts = np.asarray(shifts, dtype=float)
    if np.any(shifts <= 0.0):
        raise ValueError("shifts must be positive")
    size = 1
    while size < n:
        size *= 2
    padded = np.zeros(size)
    padded[:n] = l
    j = shifts.size
    v = np.empty((j, 1))
    v[:, 0] = 1.0 / (l[0] + shifts)
    half = 1
    while half < size:
        # kernel block: rows half..2*half-1, columns 0..half-1 of T+shift*I,
        # which never touches the diagonal, hence shift-independent
        kernel_col = padded[half : 2 * half]
        kernel_row = padded[half:0:-1]
        length = 2 * half
        embedding = np.zeros(length)
        embedding[:half] = kernel_col
        if half > 1:
            embedding[half + 1 :] = kernel_row[1:][::-1]
        kernel_spectrum = scipy.fft.rfft(embedding)
        top_spectrum = scipy.fft.rfft(v, n=length, axis=1)
        coupled = scipy.fft.irfft(
            top_spectrum * kernel_spectrum, n=length, axis=1
        )[:, :half]
        # bottom = -(leading-block inverse) @ coupled, a per-row
        # lower-Toeplitz product with kernel v
        mixed = scipy.fft.irfft(
            top_spectrum * scipy.fft.rfft(coupled, n=length, axis=1),
            n=length,
            axis=1,
        )[:, :half]
        v = np.hstack([v, -mixed])
        half *= 2
    return np.ascontiguousarray(v[:, :n])


def _batched_lower_toeplitz_matvec(columns: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    # per-row lower-triangular Toeplitz products: row j uses columns[j]
    j, n = rhs.shape
    length = scipy.fft.next_fast_len(2 * n, real=True)
    spectra = scipy.fft.rfft(columns, n=length, axis=1)
    transformed = scipy.fft.rfft(rhs, n=length, axis=1)
    out = scipy.fft.irfft(spectra * transformed, n=length, axis=1)
    return np.ascontiguousarray(out[:, :n])


class TauPreconditioner:
    """Single- and two-sided sine-transform preconditioners, matrix-free.

    Immutable after construction; every apply allocates its own scratch, so
    concurrent applies are safe.  Use :func:`build_preconditioner` to construct one from a
    problem specification.

    Parameters
    ----------
    lambda_tilde : ndarray of shape (J,)
        Positive eigenvalue grid of the tau approximation, flattened in the
        same spatial lexicographic order as the vector layout.
    temporal : TemporalOperator
    m_space : tuple of int
        Spatial grid shape (must multiply to J).
    eta_factor : float
        The overall scaling folded into ``lambda_tilde``.
    fast_block_solve : bool
        Use the doubling-based fast triangular-Toeplitz inverse for the J
        block solves instead of baseline forward substitution.  Both paths
        agree to tight tolerance; the baseline is the reference.
    """

    def __init__(
        self,
        lambda_tilde: np.ndarray,
        temporal: TemporalOperator,
        m_space: tuple[int, ...],
        eta_factor: float = ETA_DEFAULT,
        fast_block_solve: bool = False,
    ):
        lam = np.ascontiguousarray(lambda_tilde, dtype=float)
        if lam.ndim != 1:
            raise ValueError("lambda_tilde must be 1-D")
        if int(np.prod(m_space)) != lam.size:
            raise ValueError("m_space must multiply to len(lambda_tilde)")
        if np.any(lam <= 0.0) or not np.all(np.isfinite(lam)):
            raise ValueError(
                "tau eigenvalue grid must be strictly positive and finite; "
                "a nonpositive entry signals a weight sequence violating the "
                "sign/prefix conditions"
            )
        if eta_factor <= 0.0:
            raise ValueError("eta_factor must be positive")
        self.lambda_tilde = lam
        self.sqrt_lambda = np.sqrt(lam)
        self.inv_sqrt_lambda = 1.0 / self.sqrt_lambda
        self.temporal = temporal
        self.m_space = tuple(int(m) for m in m_space)
        self.eta_factor = float(eta_factor)
        self.fast_block_solve = bool(fast_block_solve)
        self.n_time = temporal.n
        self.n_space = lam.size
        self.size = self.n_time * self.n_space
        self.plans = tuple(SineTransformPlan(m) for m in self.m_space)
        self._spatial_axes = tuple(range(len(self.m_space)))
        self._grid_shape = self.m_space + (self.n_time,)
        self._inverse_columns = (
            fast_shifted_block_inverse_columns(temporal.first_column, lam)
            if fast_block_solve
            else None
        )

    @property
    def lambda_min(self) -> float:
        """Smallest tau eigenvalue; controls the residual-domination bound."""
        return float(self.lambda_tilde.min())

    def _dst_space(self, x: np.ndarray) -> np.ndarray:
        # per-axis plans, not dstn: each plan picks the faster of the FFT
        # and cached-matrix routes for its size
        for axis, plan in zip(self._spatial_axes, self.plans):
            x = plan.apply(x, axis=axis)
        return x

    def _block_solve(self, rhs_flat: np.ndarray) -> np.ndarray:
        if self._inverse_columns is not None:
            return _batched_lower_toeplitz_matvec(self._inverse_columns, rhs_flat)
        return solve_shifted_blocks(
            self.temporal.first_column, self.lambda_tilde, rhs_flat
        )

    def _check_length(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.size,):
            raise ValueError(f"expected shape ({self.size},), got {v.shape}")
        return v

    def apply_P_inv(self, v: np.ndarray) -> np.ndarray:
        """Apply the single-sided preconditioner inverse.

        Three stages: DST across space, J independent solves with
        (T + lambda_tilde_i I), DST across space again.
        """
        v = self._check_length(v)
        x = self._dst_space(v.reshape(self._grid_shape))
        solved = self._block_solve(x.reshape(self.n_space, self.n_time))
        return self._dst_space(solved.reshape(self._grid_shape)).reshape(-1)

    def apply_Pl_inv(self, v: np.ndarray) -> np.ndarray:
        """Apply the inverse of the left factor of the two-sided split.

        Per sine mode the left factor is
        ``lambda^{-1/2} T + lambda^{1/2} I = lambda^{-1/2} (T + lambda I)``,
        so the block solve reuses the same shifted systems with a
        sqrt-scaled right-hand side.
        """
        v = self._check_length(v)
        x = self._dst_space(v.reshape(self._grid_shape))
        flat = x.reshape(self.n_space, self.n_time) * self.sqrt_lambda[:, None]
        solved = self._block_solve(flat)
        return self._dst_space(solved.reshape(self._grid_shape)).reshape(-1)

    def _scale_in_sine_basis(self, v: np.ndarray, scale: np.ndarray) -> np.ndarray:
        v = self._check_length(v)
        x = self._dst_space(v.reshape(self._grid_shape))
        flat = x.reshape(self.n_space, self.n_time)
        flat *= scale[:, None]
        return self._dst_space(flat.reshape(self._grid_shape)).reshape(-1)

    def apply_Pr(self, v: np.ndarray) -> np.ndarray:
        """Apply the right factor ``B_tau^{1/2} (x) I_N``."""
        return self._scale_in_sine_basis(v, self.sqrt_lambda)

    def apply_Pr_inv(self, v: np.ndarray) -> np.ndarray:
        """Apply the inverse right factor ``B_tau^{-1/2} (x) I_N``."""
        return self._scale_in_sine_basis(v, self.inv_sqrt_lambda)


def build_preconditioner(
    spec: ProblemSpec,
    weights: Sequence[SpatialWeights] | None = None,
    temporal: TemporalOperator | None = None,
    eta: float = ETA_DEFAULT,
    fast_block_solve: bool = False,
) -> TauPreconditioner:
    """Build the tau preconditioner for a problem specification.

    Parameters
    ----------
    spec : ProblemSpec
    weights : sequence of SpatialWeights, optional
        Per-direction weights; derived from ``spec`` when omitted.
    temporal : TemporalOperator, optional
        Derived from ``spec`` when omitted.
    eta : float
        Overall scaling of the tau approximation; the default minimizes the
        two-sided condition-number bound.
    fast_block_solve : bool
        Enable the doubling-based fast block solver (off by default; the
        forward-substitution baseline is the reference path).

    Returns
    -------
    TauPreconditioner

    Raises
    ------
    ValueError
        On nonpositive ``eta`` or a nonpositive eigenvalue grid.
    """
    from .weights import direction_weights
    from .weights import l1_weights as _l1

    if eta <= 0.0:
        raise ValueError(f"eta must be positive, got {eta}")
    if weights is None:
        weights = direction_weights(spec)
    if temporal is None:
        temporal = TemporalOperator(_l1(spec.alpha, spec.n_time, spec.mu).l)
    if len(weights) != spec.dimension:
        raise ValueError("need one weight sequence per direction")
    per_direction = [
        eta_i * tau_eigenvalues(w, m)
        for w, m, eta_i in zip(weights, spec.m_space, spec.eta)
    ]
    grid = per_direction[0]
    for q in per_direction[1:]:
        grid = grid[..., None] + q
    lam = eta * grid.reshape(-1)
    return TauPreconditioner(
        lam,
        temporal,
        spec.m_space,
        eta_factor=eta,
        fast_block_solve=fast_block_solve,
    )
