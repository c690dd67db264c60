"""Weight sequences for the fractional-diffusion discretization.

The time direction uses the L1 quadrature for a Caputo derivative of order
``alpha`` in (0, 1); space uses one of three second-order finite-difference
approximations of the Riesz derivative of order ``beta`` in (1, 2).  Every
scheme reduces to a set of scalar weights; everything downstream (operators,
preconditioner, dense oracle) is built from the sequences produced here.

All three spatial schemes share the sign structure required by the
preconditioner theory: leading weight positive, tail weights nonpositive and
nondecreasing, and positive scaled prefix sums.  ``verify_weight_properties``
checks those clauses numerically for any weight sequence.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SpatialScheme",
    "ProblemSpec",
    "TemporalWeights",
    "SpatialWeights",
    "PropertyReport",
    "l1_weights",
    "spatial_weights",
    "direction_weights",
    "verify_weight_properties",
]


class SpatialScheme(enum.Enum):
    """Finite-difference scheme for the Riesz spatial derivative."""

    CENTERED = "centered"                # fractional centered difference
    SHIFTED_GRUNWALD = "shifted-grunwald"
    WEIGHTED_SHIFTED = "weighted-shifted"  # weighted-shifted Grunwald

    @classmethod
    def from_name(cls, name: str) -> "SpatialScheme":
        """Parse a scheme tag; accepts the dashed names and lazy variants."""
        key = name.strip().lower().replace("_", "-")
        for scheme in cls:
            if scheme.value == key:
                return scheme
        raise ValueError(
            f"unknown spatial scheme {name!r}; expected one of "
            f"{[s.value for s in cls]}"
        )


@dataclass(frozen=True)
class ProblemSpec:
    """Parameters of one discretized time-space fractional diffusion problem.

    Parameters
    ----------
    alpha : float
        Temporal fractional order, in (0, 1).
    beta : tuple of float
        Spatial fractional order per direction, each in (1, 2).
    c : tuple of float
        Positive diffusion coefficient per direction.
    bounds : tuple of (float, float)
        Spatial interval per direction, low < high.
    final_time : float
        Positive end time of the evolution.
    n_time : int
        Number of time levels N (uniform step ``mu = final_time / n_time``).
    m_space : tuple of int
        Number of interior grid points per direction (mesh width
        ``h_i = (high_i - low_i) / (m_i + 1)``).
    scheme : SpatialScheme
        Spatial discretization scheme.
    """

    alpha: float
    beta: tuple[float, ...]
    c: tuple[float, ...]
    bounds: tuple[tuple[float, float], ...]
    final_time: float
    n_time: int
    m_space: tuple[int, ...]
    scheme: SpatialScheme = SpatialScheme.SHIFTED_GRUNWALD

    def __post_init__(self) -> None:
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        object.__setattr__(self, "c", tuple(float(ci) for ci in self.c))
        object.__setattr__(
            self, "bounds", tuple((float(a), float(b)) for a, b in self.bounds)
        )
        object.__setattr__(self, "m_space", tuple(int(m) for m in self.m_space))
        d = len(self.beta)
        if d not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {d}")
        if not (len(self.c) == len(self.bounds) == len(self.m_space) == d):
            raise ValueError("beta, c, bounds and m_space must share one length")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        for b in self.beta:
            if not 1.0 < b < 2.0:
                raise ValueError(f"beta must lie in (1, 2), got {b}")
        for ci in self.c:
            if ci <= 0.0:
                raise ValueError(f"diffusion coefficients must be positive, got {ci}")
        for lo, hi in self.bounds:
            if not lo < hi:
                raise ValueError(f"invalid interval ({lo}, {hi})")
        if self.final_time <= 0.0:
            raise ValueError("final_time must be positive")
        if self.n_time < 1:
            raise ValueError("n_time must be at least 1")
        for m in self.m_space:
            if m < 1:
                raise ValueError("interior point counts must be at least 1")

    @property
    def dimension(self) -> int:
        return len(self.beta)

    @property
    def mu(self) -> float:
        """Temporal step size."""
        return self.final_time / self.n_time

    @property
    def h(self) -> tuple[float, ...]:
        """Mesh width per direction."""
        return tuple(
            (hi - lo) / (m + 1) for (lo, hi), m in zip(self.bounds, self.m_space)
        )

    @property
    def eta(self) -> tuple[float, ...]:
        """Per-direction scale ``c_i / h_i**beta_i`` of the spatial operator."""
        return tuple(
            ci / hi**bi for ci, hi, bi in zip(self.c, self.h, self.beta)
        )

    @property
    def n_space(self) -> int:
        """Total number of interior spatial points J."""
        return int(np.prod(self.m_space))

    @property
    def total_unknowns(self) -> int:
        return self.n_time * self.n_space

    def grids(self) -> tuple[np.ndarray, ...]:
        """Interior grid coordinates per direction."""
        return tuple(
            lo + hi_step * np.arange(1, m + 1)
            for (lo, _), hi_step, m in zip(self.bounds, self.h, self.m_space)
        )

    def time_levels(self) -> np.ndarray:
        """The time grid t_n = n*mu for n = 1..N (initial level excluded)."""
        return self.mu * np.arange(1, self.n_time + 1)


@dataclass(frozen=True)
class TemporalWeights:
    """L1 quadrature weights for one (alpha, N, mu).

    ``l`` holds (l_0, ..., l_{N-1}); the discrete Caputo derivative at level n
    is ``sum_{k=1}^{n} l_{n-k} u_k + l_init[n-1] u_0``.  ``l_init[n-1]`` is the
    coefficient of the initial value at level n.
    """

    l: np.ndarray
    l_init: np.ndarray
    mu: float
    alpha: float


@dataclass(frozen=True)
class SpatialWeights:
    """Riesz-derivative weights (w_0, ..., w_{m-1}) for one scheme and beta."""

    w: np.ndarray
    beta: float
    scheme: SpatialScheme


@dataclass(frozen=True)
class PropertyReport:
    """Outcome of the sign/monotonicity/prefix checks on a weight sequence.

    ``prefix_min`` is the minimum over prefix lengths p <= m of
    ``(p+1)**beta * (w_0 + 2*sum_{k=1}^{p-1} w_k)`` and must stay strictly
    positive; ``prefix_argmin`` is the prefix length attaining it.
    """

    leading_positive: bool
    tail_nonpositive: bool
    tail_nondecreasing: bool
    prefix_min: float
    prefix_argmin: int

    @property
    def passed(self) -> bool:
        return (
            self.leading_positive
            and self.tail_nonpositive
            and self.tail_nondecreasing
            and self.prefix_min > 0.0
        )

    def __str__(self) -> str:
        rows = [
            ("leading weight positive", self.leading_positive),
            ("tail weights nonpositive", self.tail_nonpositive),
            ("tail weights nondecreasing", self.tail_nondecreasing),
            ("scaled prefix sums positive", self.prefix_min > 0.0),
        ]
        text = "\n".join(
            f"  [{'pass' if ok else 'FAIL'}] {name}" for name, ok in rows
        )
        return (
            f"{text}\n  prefix minimum {self.prefix_min:.6e} "
            f"at prefix length {self.prefix_argmin}"
        )


def l1_weights(alpha: float, n_time: int, mu: float) -> TemporalWeights:
    """L1 weights for the Caputo derivative of order ``alpha``.

    Parameters
    ----------
    alpha : float
        Fractional order, in (0, 1).
    n_time : int
        Number of time levels N.
    mu : float
        Time step.

    Returns
    -------
    TemporalWeights
        ``l[0] = 1/(Gamma(2-alpha) mu**alpha)``,
        ``l[k] = l[0] * ((k+1)**(1-alpha) - 2 k**(1-alpha) + (k-1)**(1-alpha))``
        for k >= 1, and ``l_init[n-1] = l[0] * ((n-1)**(1-alpha) - n**(1-alpha))``.

    Notes
    -----
    The weights of each row sum to zero together with the initial-value
    coefficient: ``sum_{k=0}^{n-1} l[k] + l_init[n-1] == 0`` exactly in
    infinite precision, so constants are annihilated by the stencil.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if n_time < 1:
        raise ValueError("n_time must be at least 1")
    if mu <= 0.0:
        raise ValueError("mu must be positive")
    scale = 1.0 / (math.gamma(2.0 - alpha) * mu**alpha)
    s = 1.0 - alpha
    l = np.empty(n_time)
    l[0] = scale
    if n_time > 1:
        k = np.arange(1, n_time, dtype=float)
        l[1:] = scale * ((k + 1.0) ** s - 2.0 * k**s + (k - 1.0) ** s)
    n = np.arange(1, n_time + 1, dtype=float)
    l_init = scale * ((n - 1.0) ** s - n**s)
    return TemporalWeights(l=l, l_init=l_init, mu=mu, alpha=alpha)


def _centered_difference(beta: float, m: int) -> np.ndarray:
    # fractional centered difference: multiplicative ratio recurrence
    w0 = math.gamma(beta + 1.0) / math.gamma(beta / 2.0 + 1.0) ** 2
    if m == 1:
        return np.array([w0])
    k = np.arange(m - 1, dtype=float)
    ratios = 1.0 - (beta + 1.0) / (beta / 2.0 + k + 1.0)
    w = np.empty(m)
    w[0] = w0
    w[1:] = w0 * np.cumprod(ratios)
    return w


def _grunwald_coefficients(beta: float, count: int) -> np.ndarray:
    # g_0 = -1 sign convention; |g_k| decays like k^{-(beta+1)}
    g = np.empty(count)
    g[0] = -1.0
    if count > 1:
        k = np.arange(count - 1, dtype=float)
        g[1:] = -np.cumprod(1.0 - (beta + 1.0) / (k + 1.0))
    return g


def _shifted_grunwald(beta: float, m: int) -> np.ndarray:
    g = _grunwald_coefficients(beta, m + 2)
    w = np.empty(m)
    w[0] = 2.0 * g[1]
    if m > 1:
        w[1] = g[0] + g[2]
    if m > 2:
        w[2:] = g[3 : m + 1]
    return -w / (2.0 * math.cos(beta * math.pi / 2.0))


def _fourth_difference_tail(s: float, m: int) -> np.ndarray:
    # fourth central difference of x**s at centers c = 3..m-1 (negated).
    # The naive five-term sum cancels ~4*log10(c) leading digits, so expand
    # (c+j)**s around c instead; the odd stencil moments vanish and the even
    # ones are 2*(2**n - 4), giving
    #   Delta4(c) = c**(s-4) * sum_t binom(s, 4+2t) * 2*(2**(4+2t) - 4) / c**(2t)
    # with every factor positive for 1 < s < 2: nothing cancels, and terms
    # shrink by ~4/c**2, so the loop exits after a few dozen rounds.
    c = np.arange(3.0, float(m))
    inv_c2 = 1.0 / (c * c)
    coef = s * (s - 1.0) * (s - 2.0) * (s - 3.0)
    acc = np.full_like(c, coef)
    xpow = np.ones_like(c)
    n = 4.0
    for _ in range(70):
        coef *= (s - n) * (s - n - 1.0) / ((n + 1.0) * (n + 2.0))
        coef *= (2.0 ** (n + 2.0) - 4.0) / (2.0**n - 4.0)
        xpow *= inv_c2
        term = coef * xpow
        acc += term
        n += 2.0
        if term.max() <= 1e-17 * acc.min():
            break
    return -(c ** (s - 4.0)) * acc


def _weighted_shifted(beta: float, m: int) -> np.ndarray:
    # p_k is the five-point difference of the one-sided power x_+**s at
    # center k-1; abscissae at or below zero contribute nothing, which gives
    # the closed forms for k <= 3
    s = 3.0 - beta
    p = np.empty(m + 1)
    p[0] = -1.0
    if m >= 1:
        p[1] = 4.0 - 2.0**s
    if m >= 2:
        p[2] = -(3.0**s) + 4.0 * 2.0**s - 6.0
    if m >= 3:
        p[3] = -(4.0**s) + 4.0 * 3.0**s - 6.0 * 2.0**s + 4.0
    if m >= 4:
        p[4:] = _fourth_difference_tail(s, m)
    w = np.empty(m)
    w[0] = 2.0 * p[1]
    if m > 1:
        w[1] = p[0] + p[2]
    if m > 2:
        w[2:] = p[3 : m + 1]
    return -w / (2.0 * math.cos(beta * math.pi / 2.0) * math.gamma(4.0 - beta))


def spatial_weights(scheme: SpatialScheme, beta: float, m: int) -> SpatialWeights:
    """First ``m`` Riesz-derivative weights of the chosen scheme.

    Parameters
    ----------
    scheme : SpatialScheme
        Which finite-difference approximation to use.
    beta : float
        Spatial fractional order, strictly inside (1, 2); the scheme
        prefactors involve ``1/cos(beta*pi/2)`` and blow up at the endpoints.
    m : int
        Number of weights (equals the interior grid size when building the
        symmetric Toeplitz factor).

    Returns
    -------
    SpatialWeights

    Notes
    -----
    The Grunwald-based schemes assemble their weights from an auxiliary
    coefficient sequence (g for the shifted scheme, p for the weighted one)
    as ``w~_0 = 2 g_1``, ``w~_1 = g_0 + g_2``, ``w~_k = g_{k+1}`` for k >= 2,
    then scale by the scheme prefactor.
    """
    if not 1.0 < beta < 2.0:
        raise ValueError(f"beta must lie strictly in (1, 2), got {beta}")
    if m < 1:
        raise ValueError("m must be at least 1")
    if scheme is SpatialScheme.CENTERED:
        w = _centered_difference(beta, m)
    elif scheme is SpatialScheme.SHIFTED_GRUNWALD:
        w = _shifted_grunwald(beta, m)
    elif scheme is SpatialScheme.WEIGHTED_SHIFTED:
        w = _weighted_shifted(beta, m)
    else:  # pragma: no cover - enum is closed
        raise ValueError(f"unhandled scheme {scheme}")
    return SpatialWeights(w=w, beta=beta, scheme=scheme)


def direction_weights(spec: ProblemSpec) -> tuple[SpatialWeights, ...]:
    """Spatial weight sequences for every direction of ``spec``."""
    return tuple(
        spatial_weights(spec.scheme, b, m)
        for b, m in zip(spec.beta, spec.m_space)
    )


def verify_weight_properties(weights: SpatialWeights) -> PropertyReport:
    """Check the sign, monotonicity and prefix-sum conditions on weights.

    Report-only: never raises.  A sequence passing all clauses yields a
    positive definite symmetric Toeplitz factor and a positive tau
    eigenvalue grid downstream.
    """
    w = np.asarray(weights.w, dtype=float)
    m = w.size
    leading_positive = bool(w[0] > 0.0)
    tail = w[1:]
    tail_nonpositive = bool(np.all(tail <= 0.0))
    tail_nondecreasing = bool(np.all(np.diff(tail) >= 0.0)) if m > 2 else True
    # prefix p uses w_0 + 2*sum_{k=1}^{p-1} w_k, scaled by (p+1)^beta
    prefix_sums = w[0] + 2.0 * np.concatenate(([0.0], np.cumsum(tail)))
    p = np.arange(1, m + 1, dtype=float)
    scaled = (p + 1.0) ** weights.beta * prefix_sums
    argmin = int(np.argmin(scaled))
    return PropertyReport(
        leading_positive=leading_positive,
        tail_nonpositive=tail_nonpositive,
        tail_nondecreasing=tail_nondecreasing,
        prefix_min=float(scaled[argmin]),
        prefix_argmin=argmin + 1,
    )
