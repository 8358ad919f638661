"""Gaussian process regression with wavelet-filtered priors.

Labels are modeled as y = f + noise with f ~ GP(0, W K W^T): a base node
kernel K (identity, or a polynomial kernel on node features) pushed through
the wavelet filter matrix W. Filter scales, the noise variance, and the
feature-kernel variance are fitted by gradient ascent on the exact log
marginal likelihood with analytic gradients, optimized in log space over
random restarts.

Two covariance backends share one interface: the exact backend works in the
Laplacian eigenbasis (C = U diag(g) M diag(g) U^T with M = U^T K U cached),
the polynomial backend never eigendecomposes and reaches covariance blocks
through sparse matvecs with a fitted polynomial surrogate of the filter.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.linalg import cho_solve, cholesky

from .datasets import polynomial_feature_kernel
from .filters import FilterLike, FilterSpec, evaluate_filter, filter_gradient
from .graphs import NormalizedLaplacian, SpectralDecomposition
from .optim import adam_maximize
from .polyfit import (
    FitMode,
    PolynomialFilter,
    ProjectionMatrix,
    apply_polynomial,
    coefficient_gradient,
    fit_polynomial,
)

JITTER_START_RATIO = 1e-8
JITTER_MAX_RATIO = 1e-2
INIT_SCALE_RANGE = (0.1, 20.0)
INIT_NOISE_FACTOR = 0.1


class FeatureKernelKind(str, enum.Enum):
    IDENTITY = "identity"
    POLYNOMIAL = "polynomial"


@dataclass(frozen=True, eq=False)
class FeatureKernel:
    """Base node kernel K before wavelet filtering.

    The identity kind is parameter-free (K = I). The polynomial kind builds
    variance * (x_i . x_j + offset)^degree from node features; its variance
    is the one trainable parameter (log-space) unless train_variance is off.
    """

    kind: FeatureKernelKind
    features: np.ndarray | None = None
    degree: int = 3
    variance: float = 1.0
    offset: float = 1.0
    train_variance: bool = True

    def __post_init__(self):
        if self.variance <= 0:
            raise ValueError(f"variance must be positive, got {self.variance}")
        if self.kind is FeatureKernelKind.POLYNOMIAL:
            if self.features is None:
                raise ValueError("polynomial feature kernel needs a feature matrix")
            if self.offset < 0:
                raise ValueError(f"offset must be nonnegative, got {self.offset}")

    @property
    def n_params(self) -> int:
        if self.kind is FeatureKernelKind.IDENTITY:
            return 0
        return 1 if self.train_variance else 0

    def base_gram(self) -> np.ndarray | None:
        """Unit-variance Gram matrix; None stands for the identity."""
        if self.kind is FeatureKernelKind.IDENTITY:
            return None
        return polynomial_feature_kernel(self.features, self.degree, 1.0, self.offset)

    def with_variance(self, variance: float) -> "FeatureKernel":
        return replace(self, variance=float(variance))

    def to_json_dict(self) -> dict:
        out: dict = {"kind": self.kind.value, "variance": self.variance}
        if self.kind is FeatureKernelKind.POLYNOMIAL:
            out.update(degree=self.degree, offset=self.offset)
        return out


def identity_kernel() -> FeatureKernel:
    return FeatureKernel(kind=FeatureKernelKind.IDENTITY, variance=1.0, train_variance=False)


def polynomial_kernel(
    features: np.ndarray,
    degree: int = 3,
    variance: float = 1.0,
    offset: float = 1.0,
    train_variance: bool = True,
) -> FeatureKernel:
    return FeatureKernel(
        kind=FeatureKernelKind.POLYNOMIAL,
        features=np.asarray(features, dtype=np.float64),
        degree=degree,
        variance=variance,
        offset=offset,
        train_variance=train_variance,
    )


@dataclass(frozen=True, eq=False)
class WaveletGPModel:
    """GP model with a filtered prior over all graph nodes, zero mean.

    Exactly one of ``decomposition`` (exact backend) or ``projection``
    (polynomial backend, fitting the filter through the given projection)
    must be set.
    """

    lap: NormalizedLaplacian
    filter_spec: FilterLike
    feature_kernel: FeatureKernel
    noise_variance: float
    train_indices: np.ndarray
    decomposition: SpectralDecomposition | None = None
    projection: ProjectionMatrix | None = None

    def __post_init__(self):
        if (self.decomposition is None) == (self.projection is None):
            raise ValueError("set exactly one of decomposition (exact) or projection (polynomial)")
        if self.noise_variance <= 0:
            raise ValueError(f"noise variance must be positive, got {self.noise_variance}")
        idx = np.asarray(self.train_indices, dtype=np.int64)
        object.__setattr__(self, "train_indices", idx)
        n = self.lap.n_nodes
        if idx.size == 0:
            raise ValueError("train set is empty")
        if idx.min() < 0 or idx.max() >= n:
            raise ValueError("train index out of range")
        if len(np.unique(idx)) != idx.size:
            raise ValueError("train indices must be distinct")

    @property
    def n_nodes(self) -> int:
        return self.lap.n_nodes

    @property
    def is_exact(self) -> bool:
        return self.decomposition is not None


@dataclass(frozen=True, eq=False)
class PosteriorPrediction:
    """Posterior mean and noiseless latent variance at query nodes."""

    mean: np.ndarray
    variance: np.ndarray


@dataclass(frozen=True, eq=False)
class OptimizationResult:
    """Fitted model plus the objective trace of the winning restart."""

    model: WaveletGPModel
    objective: float
    trace: np.ndarray
    restart_values: list[float]
    n_failed: int
    converged: bool

    def to_json_dict(self) -> dict:
        spec = self.model.filter_spec
        return {
            "filter": spec.to_json_dict() if isinstance(spec, FilterSpec) else repr(spec),
            "noise_variance": self.model.noise_variance,
            "feature_kernel": self.model.feature_kernel.to_json_dict(),
            "objective": self.objective,
            "objective_trace": self.trace.tolist(),
            "restart_values": self.restart_values,
            "n_failed_restarts": self.n_failed,
        }


def jittered_cholesky(mat: np.ndarray) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor with an escalating diagonal jitter.

    Tries the matrix as-is, then adds jitter starting at 1e-8 times the mean
    diagonal, growing tenfold up to 1e-2 times the mean diagonal before
    giving up.
    """
    scale = float(np.mean(np.diag(mat)))
    if scale <= 0:
        scale = 1.0
    jitter = 0.0
    while True:
        try:
            shifted = mat if jitter == 0.0 else mat + jitter * np.eye(mat.shape[0])
            return cholesky(shifted, lower=True, check_finite=False), jitter
        except np.linalg.LinAlgError:
            jitter = JITTER_START_RATIO * scale if jitter == 0.0 else jitter * 10.0
            if jitter > JITTER_MAX_RATIO * scale:
                raise np.linalg.LinAlgError(
                    "covariance stayed indefinite up to the maximum jitter"
                )


class _ExactEval:
    """Covariance blocks through the eigenbasis for one filter evaluation."""

    def __init__(self, u: np.ndarray, m0: np.ndarray | None, evals: np.ndarray, g: np.ndarray):
        self.u = u
        self.m0 = m0
        self.evals = evals
        self.g = g

    def block(self, rows: np.ndarray, cols: np.ndarray, v: float) -> np.ndarray:
        a_r = self.u[rows] * self.g
        a_c = self.u[cols] * self.g
        if self.m0 is None:
            return v * (a_r @ a_c.T)
        return v * (a_r @ self.m0 @ a_c.T)

    def diag(self, rows: np.ndarray, v: float) -> np.ndarray:
        a_r = self.u[rows] * self.g
        if self.m0 is None:
            return v * np.sum(a_r**2, axis=1)
        return v * np.sum((a_r @ self.m0) * a_r, axis=1)

    def scale_gradients(
        self, spec: FilterSpec, adjoint: np.ndarray, rows: np.ndarray, v: float
    ) -> np.ndarray:
        """d/d(scales) of sum(adjoint * C[rows, rows]); adjoint symmetric."""
        u_s = self.u[rows]
        if self.m0 is None:
            diag_h = np.sum(u_s * (adjoint @ u_s), axis=0)
            t_vec = diag_h * self.g
        else:
            h = u_s.T @ (adjoint @ u_s)
            t_vec = (h * self.m0) @ self.g
        dg = filter_gradient(spec, self.evals)
        return 2.0 * v * (dg @ t_vec)


class _PolyEval:
    """Covariance blocks through sparse matvecs for one filter evaluation."""

    def __init__(
        self,
        lap: NormalizedLaplacian,
        proj: ProjectionMatrix,
        base: np.ndarray | None,
        poly: PolynomialFilter,
    ):
        self.lap = lap
        self.proj = proj
        self.base = base
        self.poly = poly
        self._w_cache: dict[tuple, np.ndarray] = {}
        self._kw_cache: dict[tuple, np.ndarray] = {}

    def _w_cols(self, rows: np.ndarray) -> np.ndarray:
        key = tuple(rows.tolist())
        if key not in self._w_cache:
            eye_cols = np.zeros((self.lap.n_nodes, len(rows)))
            eye_cols[rows, np.arange(len(rows))] = 1.0
            self._w_cache[key] = apply_polynomial(self.lap, self.poly, eye_cols)
        return self._w_cache[key]

    def _kw_cols(self, rows: np.ndarray) -> np.ndarray:
        key = tuple(rows.tolist())
        if key not in self._kw_cache:
            w = self._w_cols(rows)
            self._kw_cache[key] = w if self.base is None else self.base @ w
        return self._kw_cache[key]

    def block(self, rows: np.ndarray, cols: np.ndarray, v: float) -> np.ndarray:
        out = v * (self._w_cols(rows).T @ self._kw_cols(cols))
        if rows is cols or np.array_equal(rows, cols):
            out = 0.5 * (out + out.T)
        return out

    def diag(self, rows: np.ndarray, v: float) -> np.ndarray:
        return v * np.sum(self._w_cols(rows) * self._kw_cols(rows), axis=0)

    def scale_gradients(
        self, spec: FilterSpec, adjoint: np.ndarray, rows: np.ndarray, v: float
    ) -> np.ndarray:
        kw = self._kw_cols(rows)
        dgam = coefficient_gradient(spec, self.proj)
        eye_cols = np.zeros((self.lap.n_nodes, len(rows)))
        eye_cols[rows, np.arange(len(rows))] = 1.0
        out = np.empty(spec.n_params)
        for j in range(spec.n_params):
            d_poly = PolynomialFilter(
                coefficients=dgam[j], degree=self.proj.degree, spec=None, mode=self.proj.mode
            )
            d_cols = apply_polynomial(self.lap, d_poly, eye_cols)
            out[j] = 2.0 * v * float(np.sum(adjoint * (d_cols.T @ kw)))
        return out


class CovarianceWorkspace:
    """Caches per-model quantities that survive hyperparameter changes."""

    def __init__(self, model: WaveletGPModel):
        self.model = model
        self.base = model.feature_kernel.base_gram()
        if model.is_exact:
            dec = model.decomposition
            self.u = dec.eigenvectors
            self.evals = dec.eigenvalues
            self.m0 = None if self.base is None else self.u.T @ self.base @ self.u
        else:
            self.u = None

    def evaluate(self, filter_like: FilterLike):
        if self.model.is_exact:
            g = evaluate_filter(filter_like, self.evals)
            return _ExactEval(self.u, self.m0, self.evals, g)
        poly = fit_polynomial(filter_like, self.model.projection)
        return _PolyEval(self.model.lap, self.model.projection, self.base, poly)


def prior_covariance(model: WaveletGPModel) -> np.ndarray:
    """Full N x N prior covariance W K W^T, jittered until Cholesky passes."""
    ws = CovarianceWorkspace(model)
    ev = ws.evaluate(model.filter_spec)
    all_nodes = np.arange(model.n_nodes)
    cov = ev.block(all_nodes, all_nodes, model.feature_kernel.variance)
    cov = 0.5 * (cov + cov.T)
    _, jitter = jittered_cholesky(cov)
    if jitter > 0:
        cov = cov + jitter * np.eye(model.n_nodes)
    return cov


def _lml_pieces(c_tt: np.ndarray, noise: float, y: np.ndarray):
    a_mat = c_tt + noise * np.eye(len(y))
    chol_l, _ = jittered_cholesky(a_mat)
    alpha = cho_solve((chol_l, True), y, check_finite=False)
    lml = (
        -0.5 * float(y @ alpha)
        - float(np.sum(np.log(np.diag(chol_l))))
        - 0.5 * len(y) * math.log(2.0 * math.pi)
    )
    return lml, chol_l, alpha


def log_marginal_likelihood(model: WaveletGPModel, y_train: np.ndarray) -> float:
    """Exact Gaussian log marginal likelihood of the training labels."""
    y = np.asarray(y_train, dtype=np.float64)
    if y.shape != model.train_indices.shape:
        raise ValueError("labels must align with train indices")
    ws = CovarianceWorkspace(model)
    ev = ws.evaluate(model.filter_spec)
    c_tt = ev.block(model.train_indices, model.train_indices, model.feature_kernel.variance)
    lml, _, _ = _lml_pieces(c_tt, model.noise_variance, y)
    return lml


def _pack(spec: FilterSpec, noise: float, kernel: FeatureKernel, fix_noise: bool) -> np.ndarray:
    parts = [np.log(spec.scales())]
    if not fix_noise:
        parts.append([math.log(noise)])
    if kernel.n_params:
        parts.append([math.log(kernel.variance)])
    return np.concatenate([np.asarray(p, dtype=np.float64) for p in parts])


def _unpack(
    packed: np.ndarray, spec: FilterSpec, noise: float, kernel: FeatureKernel, fix_noise: bool
) -> tuple[FilterSpec, float, FeatureKernel]:
    k = spec.n_params
    new_spec = spec.with_scales(np.exp(packed[:k]))
    pos = k
    if not fix_noise:
        noise = float(np.exp(packed[pos]))
        pos += 1
    if kernel.n_params:
        kernel = kernel.with_variance(float(np.exp(packed[pos])))
    return new_spec, noise, kernel


def _objective(ws: CovarianceWorkspace, y: np.ndarray, fix_noise: bool):
    model = ws.model
    spec0 = model.filter_spec
    if not isinstance(spec0, FilterSpec):
        raise TypeError("hyperparameter optimization needs a FilterSpec filter")
    train = model.train_indices

    def value_and_grad(packed: np.ndarray):
        spec, noise, kernel = _unpack(
            packed, spec0, model.noise_variance, model.feature_kernel, fix_noise
        )
        try:
            ev = ws.evaluate(spec)
            v = kernel.variance
            c_tt = ev.block(train, train, v)
            lml, chol_l, alpha = _lml_pieces(c_tt, noise, y)
            a_inv = cho_solve((chol_l, True), np.eye(len(y)), check_finite=False)
            g_full = np.outer(alpha, alpha) - a_inv
            # Log-space chain rule: multiply each raw gradient by its scale.
            grad_scales = ev.scale_gradients(spec, 0.5 * g_full, train, v) * spec.scales()
            grads = [grad_scales]
            if not fix_noise:
                grads.append([0.5 * float(np.trace(g_full)) * noise])
            if kernel.n_params:
                grads.append([0.5 * float(np.sum(g_full * c_tt))])
            return lml, np.concatenate([np.asarray(g) for g in grads])
        except np.linalg.LinAlgError:
            return -np.inf, np.zeros_like(packed)

    return value_and_grad


def optimize_hyperparameters(
    model: WaveletGPModel,
    y_train: np.ndarray,
    restarts: int = 5,
    max_iters: int = 300,
    seed: int = 0,
    lr: float = 0.01,
    fix_noise: bool = False,
) -> OptimizationResult:
    """Fit scales, noise, and feature variance by restarted Adam ascent.

    The first restart starts from the model's own settings; later restarts
    draw scales log-uniformly from [0.1, 20]. Unless fixed, the noise
    variance initializes at 0.1 times the label variance on every restart.
    Restarts that fail numerically are skipped and counted; the best final
    objective wins.
    """
    if restarts < 1:
        raise ValueError(f"need at least one restart, got {restarts}")
    y = np.asarray(y_train, dtype=np.float64)
    if y.shape != model.train_indices.shape:
        raise ValueError("labels must align with train indices")
    spec0 = model.filter_spec
    if not isinstance(spec0, FilterSpec):
        raise TypeError("hyperparameter optimization needs a FilterSpec filter")

    ws = CovarianceWorkspace(model)
    objective = _objective(ws, y, fix_noise)
    noise_init = model.noise_variance if fix_noise else max(
        INIT_NOISE_FACTOR * float(np.var(y)), 1e-6
    )

    best = None
    restart_values: list[float] = []
    n_failed = 0
    lo, hi = INIT_SCALE_RANGE
    for child_seed in np.random.SeedSequence(seed).spawn(restarts):
        rng = np.random.default_rng(child_seed)
        if not restart_values and not n_failed:
            spec_r = spec0
        else:
            scales = np.exp(rng.uniform(math.log(lo), math.log(hi), size=spec0.n_params))
            spec_r = spec0.with_scales(scales)
        packed0 = _pack(spec_r, noise_init, model.feature_kernel, fix_noise)
        try:
            res = adam_maximize(objective, packed0, lr=lr, max_iters=max_iters)
        except (FloatingPointError, np.linalg.LinAlgError):
            n_failed += 1
            continue
        restart_values.append(res.value)
        if best is None or res.value > best.value:
            best = res
    if best is None:
        raise RuntimeError("every restart failed numerically")

    spec_f, noise_f, kernel_f = _unpack(
        best.x, spec0, model.noise_variance, model.feature_kernel, fix_noise
    )
    fitted = replace(
        model, filter_spec=spec_f, noise_variance=noise_f, feature_kernel=kernel_f
    )
    return OptimizationResult(
        model=fitted,
        objective=best.value,
        trace=best.trace,
        restart_values=restart_values,
        n_failed=n_failed,
        converged=best.converged,
    )


def predict(
    model: WaveletGPModel, y_train: np.ndarray, query_indices: Sequence[int]
) -> PosteriorPrediction:
    """Posterior mean and latent variance at the query nodes."""
    y = np.asarray(y_train, dtype=np.float64)
    if y.shape != model.train_indices.shape:
        raise ValueError("labels must align with train indices")
    query = np.asarray(query_indices, dtype=np.int64)
    if query.size and (query.min() < 0 or query.max() >= model.n_nodes):
        raise ValueError("query index out of range")
    ws = CovarianceWorkspace(model)
    ev = ws.evaluate(model.filter_spec)
    v = model.feature_kernel.variance
    train = model.train_indices
    c_tt = ev.block(train, train, v)
    _, chol_l, alpha = _lml_pieces(c_tt, model.noise_variance, y)
    c_qt = ev.block(query, train, v)
    mean = c_qt @ alpha
    solved = cho_solve((chol_l, True), c_qt.T, check_finite=False)
    variance = ev.diag(query, v) - np.sum(c_qt * solved.T, axis=1)
    return PosteriorPrediction(mean=mean, variance=np.maximum(variance, 0.0))


def filter_mae(
    fitted_spec: FilterLike, truth_spec: FilterLike, eigenvalues: np.ndarray
) -> float:
    """Mean absolute gap between two filter responses on given eigenvalues."""
    fitted = evaluate_filter(fitted_spec, eigenvalues)
    truth = evaluate_filter(truth_spec, eigenvalues)
    return float(np.mean(np.abs(fitted - truth)))
