"""Eigendecomposition-free spectral density estimation.

The cumulative spectral density of the normalized Laplacian at a threshold t
is (1/N) tr 1{L <= t}. Each indicator is expanded in Chebyshev polynomials on
[-1, 1] (the spectrum [0, 2] shifted by the identity), Jackson damping
suppresses Gibbs oscillations, and the trace is estimated stochastically with
Gaussian probe vectors. Chebyshev moments are shared across all thresholds,
so one recurrence pass serves the whole grid.

The estimated CDF is cleaned up by isotonic projection, interpolated with a
monotone piecewise cubic, and differentiated to obtain density weights for
spectrum-adaptive least squares.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial import chebyshev as npcheb
from scipy.interpolate import PchipInterpolator

from .graphs import NormalizedLaplacian

WEIGHT_FLOOR_RATIO = 1e-4

# Defaults for experiment runs; tests use higher-accuracy settings locally.
DEFAULT_GRID_SIZE = 30
DEFAULT_PROBES = 100
DEFAULT_DEGREE = 100


@dataclass(frozen=True)
class DensityConfig:
    grid_size: int
    probes: int
    degree: int
    seed: int


@dataclass(frozen=True, eq=False)
class JacksonChebStep:
    """Damped Chebyshev expansion of the spectral step indicator.

    ``coefficients[k]`` multiplies T_k evaluated at ``lam - 1``; Jackson
    damping factors are already folded in.
    """

    threshold: float
    degree: int
    coefficients: np.ndarray

    def evaluate(self, lam) -> np.ndarray:
        x = np.asarray(lam, dtype=np.float64) - 1.0
        return npcheb.chebval(x, self.coefficients)


@dataclass(frozen=True, eq=False)
class DensityEstimate:
    """Estimated spectral CDF on a threshold grid, with derived weights."""

    sample_points: np.ndarray
    cdf_values: np.ndarray
    interpolant: PchipInterpolator
    weights: np.ndarray
    config: DensityConfig

    def to_json_dict(self) -> dict:
        return {
            "sample_points": self.sample_points.tolist(),
            "cdf_values": self.cdf_values.tolist(),
            "weights": self.weights.tolist(),
            "config": {
                "grid_size": self.config.grid_size,
                "probes": self.config.probes,
                "degree": self.config.degree,
                "seed": self.config.seed,
            },
        }


def jackson_damping(degree: int) -> np.ndarray:
    """Jackson kernel factors g_0..g_degree for a series truncated at degree."""
    n_terms = degree + 2
    k = np.arange(degree + 1, dtype=np.float64)
    angle = math.pi / n_terms
    return (
        (n_terms - k) * np.cos(k * angle) + np.sin(k * angle) / math.tan(angle)
    ) / n_terms


def step_coefficients(threshold: float, degree: int) -> np.ndarray:
    """Undamped Chebyshev coefficients of 1{x <= threshold - 1} on [-1, 1]."""
    theta0 = math.acos(min(1.0, max(-1.0, threshold - 1.0)))
    coeffs = np.empty(degree + 1, dtype=np.float64)
    coeffs[0] = 1.0 - theta0 / math.pi
    k = np.arange(1, degree + 1, dtype=np.float64)
    coeffs[1:] = -(2.0 / math.pi) * np.sin(k * theta0) / k
    return coeffs


def jackson_cheb_step(threshold: float, degree: int) -> JacksonChebStep:
    """Damped Chebyshev approximation of the indicator 1{lam <= threshold}."""
    if degree < 1:
        raise ValueError(f"degree must be at least 1, got {degree}")
    if not 0.0 <= threshold <= 2.0:
        raise ValueError(f"threshold must lie in [0, 2], got {threshold}")
    coeffs = step_coefficients(threshold, degree) * jackson_damping(degree)
    return JacksonChebStep(threshold=float(threshold), degree=degree, coefficients=coeffs)


def estimate_trace(
    apply: Callable[[np.ndarray], np.ndarray], n: int, probes: int, seed: int
) -> float:
    """Gaussian stochastic trace estimate (1/R) sum_r z_r^T B z_r.

    ``apply`` must accept an (n, k) block of column vectors and return the
    matrix product with the implicit operator B.
    """
    if probes < 1:
        raise ValueError(f"probe count must be at least 1, got {probes}")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, probes))
    return float(np.sum(z * apply(z)) / probes)


def _pool_adjacent_violators(y: np.ndarray) -> np.ndarray:
    """L2 projection onto the nondecreasing cone (uniform weights)."""
    means: list[float] = []
    counts: list[int] = []
    for v in y:
        cur_mean, cur_count = float(v), 1
        while means and means[-1] > cur_mean:
            cur_mean = (means[-1] * counts[-1] + cur_mean * cur_count) / (
                counts[-1] + cur_count
            )
            cur_count += counts[-1]
            means.pop()
            counts.pop()
        means.append(cur_mean)
        counts.append(cur_count)
    return np.repeat(means, counts)


def _weights_from_interpolant(
    interpolant: PchipInterpolator, sample_points: np.ndarray
) -> np.ndarray:
    density = np.maximum(interpolant.derivative()(sample_points), 0.0)
    peak = density.max()
    if peak <= 0.0:
        # Degenerate flat CDF: fall back to uniform weights.
        return np.ones_like(sample_points)
    weights = np.maximum(density, WEIGHT_FLOOR_RATIO * peak)
    return weights * (len(sample_points) / weights.sum())


def estimate_cdf(
    lap: NormalizedLaplacian,
    grid_size: int = DEFAULT_GRID_SIZE,
    probes: int = DEFAULT_PROBES,
    degree: int = DEFAULT_DEGREE,
    seed: int = 0,
) -> DensityEstimate:
    """Estimate the spectral CDF on a uniform threshold grid over [0, 2].

    One Chebyshev recurrence on the shifted operator L - I produces moments
    shared by every threshold; per-threshold CDF values follow by combining
    the moments with damped step coefficients. Estimates are isotonically
    projected, clamped to [0, 1], and interpolated monotonically.
    """
    if grid_size < 2:
        raise ValueError(f"grid size must be at least 2, got {grid_size}")
    n = lap.n_nodes
    xi = np.linspace(0.0, 2.0, grid_size)

    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, probes))

    # Moments mu_k = (1/R) sum_r z_r^T T_k(L - I) z_r via the three-term
    # recurrence; the shift keeps the operator spectrum inside [-1, 1].
    shifted = lambda block: lap.matrix @ block - block
    moments = np.empty(degree + 1, dtype=np.float64)
    w_prev = z
    moments[0] = np.sum(z * w_prev) / probes
    w_cur = shifted(z)
    if degree >= 1:
        moments[1] = np.sum(z * w_cur) / probes
    for k in range(2, degree + 1):
        w_prev, w_cur = w_cur, 2.0 * shifted(w_cur) - w_prev
        moments[k] = np.sum(z * w_cur) / probes

    damped = moments * jackson_damping(degree)
    coeff_rows = np.stack([step_coefficients(t, degree) for t in xi])
    raw = coeff_rows @ damped / n

    clean = np.clip(_pool_adjacent_violators(raw), 0.0, 1.0)
    interpolant = PchipInterpolator(xi, clean)
    weights = _weights_from_interpolant(interpolant, xi)
    return DensityEstimate(
        sample_points=xi,
        cdf_values=clean,
        interpolant=interpolant,
        weights=weights,
        config=DensityConfig(grid_size=grid_size, probes=probes, degree=degree, seed=seed),
    )


def density_weights(est: DensityEstimate) -> np.ndarray:
    """Least-squares weights proportional to the estimated spectral density.

    The density is the analytic derivative of the monotone cubic interpolant,
    floored at a small fraction of its peak so no weight vanishes, then
    normalized to sum to the grid size. Uniform rescaling of these weights
    leaves any weighted least-squares fit unchanged.
    """
    return _weights_from_interpolant(est.interpolant, est.sample_points)
