"""Matrix-free space-time operators.

The all-at-once system couples a lower-triangular Toeplitz time-coupling
matrix T (Kronecker factor ``I_J (x) T``) with a symmetric positive definite
Kronecker-sum spatial matrix ``B = sum_i eta_i I (x) W_i (x) I``.  Vectors
use the space-major layout throughout the package: entry index =
(spatial lexicographic index) * N + (time index), i.e. reshaping a vector to
``m_space + (N,)`` in C order puts time on the last axis.

Toeplitz matvecs run through precomputed circulant-embedding FFT plans;
below a small crossover size a dense product is cheaper and is used instead.
The crossover is a performance choice only, both paths are exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.fft

from .weights import ProblemSpec, SpatialWeights, TemporalWeights, l1_weights

__all__ = [
    "TemporalOperator",
    "SpatialOperator",
    "AllAtOnceOperator",
    "apply_T",
    "apply_B",
    "apply_A",
    "assemble_rhs",
    "DIRECT_CROSSOVER",
]

# below this size a dense matvec beats the FFT path (micro-benchmarked order
# of magnitude; correctness does not depend on it)
DIRECT_CROSSOVER = 32


class _ToeplitzAxisPlan:
    """Applies one Toeplitz factor along a chosen axis of an ndarray.

    ``kind`` is "lower" (lower-triangular, first column given) or
    "symmetric" (first column given, first row equal by symmetry).
    """

    def __init__(self, first_column: np.ndarray, kind: str):
        col = np.ascontiguousarray(first_column, dtype=float)
        if col.ndim != 1 or col.size == 0:
            raise ValueError("first column must be a nonempty 1-D array")
        if kind not in ("lower", "symmetric"):
            raise ValueError(f"unknown Toeplitz kind {kind!r}")
        self.n = col.size
        self.kind = kind
        self.column = col
        if self.n < DIRECT_CROSSOVER:
            self._dense = self._build_dense(col, kind)
            self._spectrum = None
        else:
            self._dense = None
            n = self.n
            length = scipy.fft.next_fast_len(2 * n, real=True)
            embedding = np.zeros(length)
            embedding[:n] = col
            if kind == "symmetric":
                embedding[length - n + 1 :] = col[1:][::-1]
            self._length = length
            self._spectrum = scipy.fft.rfft(embedding)

    @staticmethod
    def _build_dense(col: np.ndarray, kind: str) -> np.ndarray:
        n = col.size
        idx = np.arange(n)
        offsets = idx[:, None] - idx[None, :]
        if kind == "lower":
            dense = np.where(offsets >= 0, col[np.abs(offsets)], 0.0)
        else:
            dense = col[np.abs(offsets)]
        return dense

    def apply(self, x: np.ndarray, axis: int) -> np.ndarray:
        if x.shape[axis] != self.n:
            raise ValueError(
                f"axis {axis} has length {x.shape[axis]}, expected {self.n}"
            )
        if self._dense is not None:
            out = np.tensordot(self._dense, x, axes=([1], [axis]))
            return np.moveaxis(out, 0, axis)
        spec_shape = [1] * x.ndim
        spec_shape[axis] = self._spectrum.size
        transformed = scipy.fft.rfft(x, n=self._length, axis=axis)
        transformed *= self._spectrum.reshape(spec_shape)
        out = scipy.fft.irfft(transformed, n=self._length, axis=axis)
        slicer = [slice(None)] * x.ndim
        slicer[axis] = slice(0, self.n)
        return np.ascontiguousarray(out[tuple(slicer)])


class TemporalOperator:
    """Lower-triangular Toeplitz time-coupling matrix, defined by its first column.

    The diagonal entry (leading weight) must be positive, which makes the
    matrix invertible by forward substitution.
    """

    def __init__(self, first_column: np.ndarray):
        col = np.ascontiguousarray(first_column, dtype=float)
        if col.ndim != 1 or col.size == 0:
            raise ValueError("first column must be a nonempty 1-D array")
        if col[0] <= 0.0:
            raise ValueError("leading temporal weight must be positive")
        self.first_column = col
        self.n = col.size
        self._plan = _ToeplitzAxisPlan(col, "lower")

    @classmethod
    def from_weights(cls, weights: TemporalWeights) -> "TemporalOperator":
        return cls(weights.l)

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Matvec with a length-N vector."""
        v = np.asarray(v, dtype=float)
        if v.shape != (self.n,):
            raise ValueError(f"expected shape ({self.n},), got {v.shape}")
        return self._plan.apply(v, 0)

    def apply_along(self, x: np.ndarray, axis: int) -> np.ndarray:
        """Matvec along one axis of an ndarray (batched over the rest)."""
        return self._plan.apply(x, axis)


class SpatialOperator:
    """Kronecker-sum spatial matrix ``sum_i eta_i I (x) W_i (x) I``, matrix-free."""

    def __init__(self, weights: Sequence[SpatialWeights], eta: Sequence[float]):
        if len(weights) != len(eta) or not weights:
            raise ValueError("need one eta per weight sequence")
        self.weights = tuple(weights)
        self.eta = tuple(float(e) for e in eta)
        if any(e <= 0.0 for e in self.eta):
            raise ValueError("eta scales must be positive")
        self.m_space = tuple(w.w.size for w in self.weights)
        self.n_space = int(np.prod(self.m_space))
        self._plans = tuple(
            _ToeplitzAxisPlan(w.w, "symmetric") for w in self.weights
        )

    @classmethod
    def from_spec(cls, spec: ProblemSpec,
                  weights: Sequence[SpatialWeights] | None = None) -> "SpatialOperator":
        from .weights import direction_weights

        if weights is None:
            weights = direction_weights(spec)
        return cls(weights, spec.eta)

    @property
    def dimension(self) -> int:
        return len(self.m_space)

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Matvec with a length-J spatial vector."""
        v = np.asarray(v, dtype=float)
        if v.shape != (self.n_space,):
            raise ValueError(f"expected shape ({self.n_space},), got {v.shape}")
        x = v.reshape(self.m_space)
        return self.apply_grid(x).reshape(-1)

    def apply_grid(self, x: np.ndarray) -> np.ndarray:
        """Matvec on an array whose first d axes are the spatial grid.

        Trailing axes (e.g. time) are carried along unchanged, so the same
        code path serves both pure-space vectors and space-time blocks.
        """
        out = None
        for axis, (plan, eta) in enumerate(zip(self._plans, self.eta)):
            term = plan.apply(x, axis)  # freshly allocated, safe to mutate
            if eta != 1.0:
                term *= eta
            if out is None:
                out = term
            else:
                out += term
        return out


class AllAtOnceOperator:
    """Matrix-free all-at-once operator over the space-time grid.

    Acts on vectors of length N*J laid out space-major (time innermost):
    the image is ``(B (x) I_N) v + (I_J (x) T) v``.
    """

    def __init__(self, temporal: TemporalOperator, spatial: SpatialOperator):
        self.temporal = temporal
        self.spatial = spatial
        self.n_time = temporal.n
        self.n_space = spatial.n_space
        self.size = self.n_time * self.n_space
        self._grid_shape = spatial.m_space + (temporal.n,)

    @classmethod
    def from_spec(cls, spec: ProblemSpec) -> "AllAtOnceOperator":
        temporal = TemporalOperator(l1_weights(spec.alpha, spec.n_time, spec.mu).l)
        return cls(temporal, SpatialOperator.from_spec(spec))

    def apply(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.size,):
            raise ValueError(f"expected shape ({self.size},), got {v.shape}")
        x = v.reshape(self._grid_shape)
        out = self.spatial.apply_grid(x)
        out += self.temporal.apply_along(x, x.ndim - 1)
        return out.reshape(-1)


def apply_T(op: TemporalOperator, v: np.ndarray) -> np.ndarray:
    """Functional alias for :meth:`TemporalOperator.apply`."""
    return op.apply(v)


def apply_B(op: SpatialOperator, v: np.ndarray) -> np.ndarray:
    """Functional alias for :meth:`SpatialOperator.apply`."""
    return op.apply(v)


def apply_A(op: AllAtOnceOperator, v: np.ndarray) -> np.ndarray:
    """Functional alias for :meth:`AllAtOnceOperator.apply`."""
    return op.apply(v)


def assemble_rhs(
    spec: ProblemSpec,
    f: Callable[..., np.ndarray],
    psi: Callable[..., np.ndarray] | None = None,
) -> np.ndarray:
    """Right-hand side of the all-at-once system.

    Parameters
    ----------
    spec : ProblemSpec
    f : callable
        Source term ``f(x_1, ..., x_d, t)``.  Must broadcast over numpy
        arrays; it is evaluated on the full space-time grid in one call.
    psi : callable or None
        Initial condition ``psi(x_1, ..., x_d)``; None means identically zero.

    Returns
    -------
    ndarray of shape (N*J,)
        Entry at spatial point x and time level n (n = 1..N) equals
        ``f(x, n*mu) - l_init[n-1] * psi(x)`` in the space-major layout.
    """
    coords = np.meshgrid(*spec.grids(), indexing="ij")
    times = spec.time_levels()
    space_time = [c[..., None] for c in coords]
    rhs = np.asarray(f(*space_time, times), dtype=float)
    expected = spec.m_space + (spec.n_time,)
    rhs = np.broadcast_to(rhs, expected).astype(float, copy=True)
    if psi is not None:
        weights = l1_weights(spec.alpha, spec.n_time, spec.mu)
        psi_vals = np.asarray(psi(*coords), dtype=float)
        psi_vals = np.broadcast_to(psi_vals, spec.m_space)
        rhs -= psi_vals[..., None] * weights.l_init
    return rhs.reshape(-1)
