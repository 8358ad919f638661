"""Polynomial surrogates for spectral filters.

A degree-K polynomial p(x) = c_0 + c_1 x + ... + c_K x^K standing in for a
filter g lets the filtered operator act through K sparse matvecs instead of
an eigendecomposition. Three fitting modes share one mechanism: each builds a
linear map P from filter values at sample points to monomial coefficients, so
coefficient gradients with respect to filter scales flow through P times the
analytic filter gradient regardless of mode.

  - uniform least squares on a spectrum grid;
  - density-weighted least squares emphasizing populated spectrum regions;
  - truncated Chebyshev series on [0, 2] via Gauss-Chebyshev quadrature.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial import chebyshev as npcheb
from scipy.linalg import solve_triangular

from .filters import FilterLike, FilterSpec, evaluate_filter, filter_gradient
from .graphs import NormalizedLaplacian

# Monomial conversion conditioning degrades quickly with degree.
MAX_DEGREE = 8

DEFAULT_QUAD_NODES = 200


class FitMode(str, enum.Enum):
    UNIFORM_LS = "uniform_ls"
    WEIGHTED_LS = "weighted_ls"
    CHEBYSHEV = "chebyshev"


@dataclass(frozen=True, eq=False)
class ProjectionMatrix:
    """Linear map from filter values at sample points to coefficients.

    For the least-squares modes the matrix is (V^T Omega V)^{-1} V^T Omega
    with V the Vandermonde matrix of the sample points; for the Chebyshev
    mode it composes quadrature with the Chebyshev-to-monomial conversion.
    Either way, applying it to values of a polynomial of degree <= K recovers
    that polynomial's coefficients.
    """

    matrix: np.ndarray
    sample_points: np.ndarray
    weights: np.ndarray | None
    degree: int
    mode: FitMode


@dataclass(frozen=True, eq=False)
class PolynomialFilter:
    """Monomial coefficients of a fitted filter surrogate."""

    coefficients: np.ndarray
    degree: int
    spec: FilterLike | None
    mode: FitMode

    def __post_init__(self):
        if self.coefficients.shape != (self.degree + 1,):
            raise ValueError(
                f"degree {self.degree} needs {self.degree + 1} coefficients, "
                f"got shape {self.coefficients.shape}"
            )

    def evaluate(self, lam) -> np.ndarray:
        return np.polynomial.polynomial.polyval(
            np.asarray(lam, dtype=np.float64), self.coefficients
        )

    def to_json_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "degree": self.degree,
            "coefficients": self.coefficients.tolist(),
        }


def _check_degree(degree: int) -> None:
    if degree < 0:
        raise ValueError(f"degree must be nonnegative, got {degree}")
    if degree > MAX_DEGREE:
        raise ValueError(f"degree {degree} exceeds the supported maximum {MAX_DEGREE}")


def vandermonde(xi: np.ndarray, degree: int) -> np.ndarray:
    """Matrix with rows (1, xi_i, xi_i^2, ..., xi_i^degree)."""
    _check_degree(degree)
    xi = np.asarray(xi, dtype=np.float64)
    if xi.ndim != 1:
        raise ValueError("sample points must form a vector")
    if len(xi) < degree + 1:
        raise ValueError(
            f"{len(xi)} sample points cannot determine a degree-{degree} fit"
        )
    return np.vander(xi, degree + 1, increasing=True)


def build_projection(
    xi: np.ndarray, degree: int, weights: np.ndarray | None = None
) -> ProjectionMatrix:
    """Weighted least-squares projection onto degree-``degree`` polynomials.

    Solved through a QR factorization of the row-scaled Vandermonde matrix
    rather than the normal equations. Weights must be strictly positive;
    omitting them gives the uniform fit. Uniform rescaling of all weights
    leaves the projection unchanged.
    """
    v = vandermonde(xi, degree)
    xi = np.asarray(xi, dtype=np.float64)
    if weights is None:
        sqrt_w = np.ones(len(xi))
        mode = FitMode.UNIFORM_LS
    else:
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != xi.shape:
            raise ValueError("weights must align with sample points")
        if np.any(weights <= 0):
            raise ValueError("weights must be strictly positive")
        sqrt_w = np.sqrt(weights)
        mode = FitMode.WEIGHTED_LS
    q, r = np.linalg.qr(sqrt_w[:, None] * v)
    diag = np.abs(np.diag(r))
    if diag.min() <= 1e-12 * diag.max():
        raise ValueError("sample points are rank deficient for this degree")
    p = solve_triangular(r, q.T * sqrt_w[None, :])
    return ProjectionMatrix(
        matrix=p, sample_points=xi, weights=weights, degree=degree, mode=mode
    )


def chebyshev_projection(
    degree: int, quad_nodes: int = DEFAULT_QUAD_NODES
) -> ProjectionMatrix:
    """Truncated-Chebyshev-series fit on [0, 2] as a projection matrix.

    Gauss-Chebyshev quadrature at ``quad_nodes`` points yields the series
    coefficients as a linear map of filter values at the mapped nodes; the
    series (in the shifted variable lam - 1) is then converted to monomial
    coefficients in lam. Both steps are linear, so the composition is a
    single matrix.
    """
    _check_degree(degree)
    if quad_nodes < degree + 1:
        raise ValueError("quadrature needs at least degree + 1 nodes")
    q = np.arange(quad_nodes)
    x = np.cos(np.pi * (q + 0.5) / quad_nodes)
    lam_nodes = x + 1.0

    # Series coefficients: c_k = (2 - delta_k0)/Q * sum_q T_k(x_q) g(x_q + 1).
    t_matrix = np.stack([npcheb.chebval(x, np.eye(degree + 1)[k]) for k in range(degree + 1)])
    quad = t_matrix * (2.0 / quad_nodes)
    quad[0] *= 0.5

    # Conversion: series in x, then substitute x = lam - 1.
    conv = np.zeros((degree + 1, degree + 1))
    shift = Polynomial([-1.0, 1.0])
    for k in range(degree + 1):
        series_k = np.zeros(degree + 1)
        series_k[k] = 1.0
        poly_x = Polynomial(npcheb.cheb2poly(series_k))
        in_lam = poly_x(shift).coef
        conv[: len(in_lam), k] = in_lam
    return ProjectionMatrix(
        matrix=conv @ quad,
        sample_points=lam_nodes,
        weights=None,
        degree=degree,
        mode=FitMode.CHEBYSHEV,
    )


def fit_polynomial(filter_like: FilterLike, proj: ProjectionMatrix) -> PolynomialFilter:
    """Fit a polynomial surrogate: coefficients = P g(sample points)."""
    g = evaluate_filter(filter_like, proj.sample_points)
    return PolynomialFilter(
        coefficients=proj.matrix @ g,
        degree=proj.degree,
        spec=filter_like,
        mode=proj.mode,
    )


def chebyshev_fit(
    spec: FilterLike, degree: int, quad_nodes: int = DEFAULT_QUAD_NODES
) -> PolynomialFilter:
    """Degree-``degree`` truncated Chebyshev series of the filter on [0, 2]."""
    return fit_polynomial(spec, chebyshev_projection(degree, quad_nodes))


def coefficient_gradient(spec: FilterSpec, proj: ProjectionMatrix) -> np.ndarray:
    """Derivative of fitted coefficients with respect to the filter scales.

    Returns shape (n_params, degree + 1); fitting is linear in the filter
    values, so the chain rule reduces to the projection applied to the
    analytic filter gradient at the sample points.
    """
    grads = filter_gradient(spec, proj.sample_points)
    return grads @ proj.matrix.T


def apply_polynomial(
    lap: NormalizedLaplacian, p: PolynomialFilter, f: np.ndarray
) -> np.ndarray:
    """Evaluate p(L) f through repeated sparse matvecs.

    Accumulates c_0 f + c_1 (L f) + c_2 (L (L f)) + ...; never materializes
    a power of L. ``f`` may be a signal vector or a matrix of columns.
    """
    f = np.asarray(f, dtype=np.float64)
    if f.shape[0] != lap.n_nodes:
        raise ValueError(
            f"signal has {f.shape[0]} rows but the graph has {lap.n_nodes} nodes"
        )
    coeffs = p.coefficients
    out = coeffs[0] * f
    power = f
    for c in coeffs[1:]:
        power = lap.matrix @ power
        out = out + c * power
    return out
