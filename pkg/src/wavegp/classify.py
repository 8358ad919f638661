"""Variational multi-class GP classification with wavelet kernels.

One latent GP per class, all sharing the wavelet kernel. The variational
posterior over inducing values is a full Gaussian per class, fitted jointly
with the kernel hyperparameters by Adam ascent on the ELBO

    sum_n E_q[log softmax(f_n)[y_n]] - sum_c KL(q(u_c) || p(u_c)).

States are kept in whitened coordinates: with Lk = chol(K_zz), the class-c
posterior is q(u_c) = N(Lk m_c, Lk S_c Lkᵀ). The KL term then compares
against a standard normal and stays well conditioned no matter how
ill-conditioned K_zz is; the unwhitened parameterization makes Adam fight
curvature on the order of 1/jitter and stalls.

The expected log-likelihood is estimated with reparameterized Monte Carlo
draws (common random numbers within an optimizer step). Kernel gradients are
assembled by accumulating adjoints on every covariance block the ELBO reads
(inducing block via a Cholesky backward pass, cross block, marginal
diagonal) into one matrix on the support node set, then contracting against
the analytic covariance derivative, so both covariance backends are
supported unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import logsumexp, softmax

from .filters import FilterLike, FilterSpec
from .graphs import NormalizedLaplacian, SpectralDecomposition
from .optim import adam_maximize
from .polyfit import ProjectionMatrix
from .regression import (
    CovarianceWorkspace,
    FeatureKernel,
    WaveletGPModel,
    jittered_cholesky,
)

VARIANCE_FLOOR = 1e-12
DEFAULT_MC_SAMPLES = 16


@dataclass(frozen=True, eq=False)
class WaveletGPClassifier:
    """Classification model: filtered prior shared across class logits."""

    lap: NormalizedLaplacian
    filter_spec: FilterLike
    feature_kernel: FeatureKernel
    n_classes: int
    labeled_indices: np.ndarray
    decomposition: SpectralDecomposition | None = None
    projection: ProjectionMatrix | None = None

    def __post_init__(self):
        if (self.decomposition is None) == (self.projection is None):
            raise ValueError("set exactly one of decomposition (exact) or projection (polynomial)")
        if self.n_classes < 2:
            raise ValueError(f"need at least two classes, got {self.n_classes}")
        idx = np.asarray(self.labeled_indices, dtype=np.int64)
        object.__setattr__(self, "labeled_indices", idx)
        if idx.size == 0:
            raise ValueError("no labeled nodes")
        if idx.min() < 0 or idx.max() >= self.lap.n_nodes:
            raise ValueError("labeled index out of range")
        if len(np.unique(idx)) != idx.size:
            raise ValueError("labeled indices must be distinct")

    @property
    def is_exact(self) -> bool:
        return self.decomposition is not None

    @property
    def n_nodes(self) -> int:
        return self.lap.n_nodes


@dataclass(frozen=True, eq=False)
class VariationalState:
    """Whitened Gaussian posterior per class.

    With Lk the Cholesky factor of the inducing covariance block, class c
    has q(u_c) = N(Lk means[c], Lk factors[c] factors[c]^T Lk^T). Zero means
    with identity factors reproduce the prior exactly (KL = 0).
    """

    means: np.ndarray
    factors: np.ndarray

    def __post_init__(self):
        if self.means.ndim != 2 or self.factors.shape != self.means.shape + (self.means.shape[1],):
            raise ValueError("means must be (C, M) and factors (C, M, M)")
        diags = np.diagonal(self.factors, axis1=1, axis2=2)
        if np.any(diags <= 0):
            raise ValueError("covariance factors need strictly positive diagonals")

    @property
    def n_classes(self) -> int:
        return self.means.shape[0]

    @property
    def n_inducing(self) -> int:
        return self.means.shape[1]


@dataclass(frozen=True, eq=False)
class InducingSet:
    """Inducing node indices with covariance blocks cached at the fitted fit."""

    indices: np.ndarray
    k_zz: np.ndarray | None = None


@dataclass(frozen=True)
class VariationalFitConfig:
    lr: float = 0.01
    max_epochs: int = 300
    mc_samples: int = DEFAULT_MC_SAMPLES
    inducing: int | None = None
    seed: int = 0
    fit_kernel: bool = True


@dataclass(frozen=True, eq=False)
class VariationalFitResult:
    model: WaveletGPClassifier
    state: VariationalState
    inducing: InducingSet
    elbo_trace: np.ndarray
    best_elbo: float


@dataclass(frozen=True, eq=False)
class ClassPrediction:
    """MC-averaged class probabilities and predicted-class probability spread."""

    probabilities: np.ndarray
    variance: np.ndarray

    @property
    def classes(self) -> np.ndarray:
        return np.argmax(self.probabilities, axis=1)


@dataclass(frozen=True)
class RejectionPoint:
    threshold: float
    kept_fraction: float
    accuracy: float | None


def _support(z: np.ndarray, n: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    sup = np.unique(np.concatenate([z, n]))
    return sup, np.searchsorted(sup, z), np.searchsorted(sup, n)


def _marginals(c_ss, pos_z, pos_n, means, factors):
    """Latent marginal means/variances at the pos_n nodes, per class.

    Returns (mu, var, chol_a, v_mat) where v_mat = Lk^{-1} K_zn carries the
    whitened cross covariance reused by the backward pass.
    """
    a_mat = c_ss[np.ix_(pos_z, pos_z)]
    chol_a, _ = jittered_cholesky(a_mat)
    k_zn = c_ss[np.ix_(pos_z, pos_n)]
    k_nn = np.diag(c_ss)[pos_n]
    v_mat = solve_triangular(chol_a, k_zn, lower=True, check_finite=False)
    t_vec = k_nn - np.sum(v_mat**2, axis=0)
    mu = v_mat.T @ means.T
    w_all = np.einsum("cmk,mn->ckn", factors, v_mat)
    q_var = np.sum(w_all**2, axis=1).T
    var = np.maximum(t_vec[:, None] + q_var, VARIANCE_FLOOR)
    return mu, var, chol_a, v_mat


def _chol_backward(chol_a, chol_bar):
    """Adjoint of A -> chol(A) for symmetric perturbations of A."""
    p_mat = np.tril(chol_a.T @ chol_bar)
    m = len(p_mat)
    p_mat[np.arange(m), np.arange(m)] *= 0.5
    x = solve_triangular(chol_a, p_mat, lower=True, trans="T", check_finite=False)
    s = solve_triangular(chol_a, x.T, lower=True, trans="T", check_finite=False).T
    return 0.5 * (s + s.T)


def _elbo_core(c_ss, pos_z, pos_n, means, factors, y_idx, eps, want_grads):
    """ELBO value and, when asked, gradients plus the covariance adjoint.

    ``eps`` holds the reparameterization draws, shape (draws, n, C). The
    returned adjoint matrix lives on the support node set and satisfies
    d(elbo) = sum(adjoint * d(c_ss)) for symmetric covariance perturbations.
    """
    n_classes, m_ind = means.shape
    mu, var, chol_a, v_mat = _marginals(c_ss, pos_z, pos_n, means, factors)
    sd = np.sqrt(var)
    n_lab = len(pos_n)

    f_draws = mu[None, :, :] + sd[None, :, :] * eps
    lse = logsumexp(f_draws, axis=2)
    picked = f_draws[:, np.arange(n_lab), y_idx]
    exp_ll = float(np.mean(picked - lse, axis=0).sum())

    # Whitened KL against the standard normal, per class.
    kl_total = 0.0
    for c in range(n_classes):
        l_c = factors[c]
        kl_total += 0.5 * (
            float(np.sum(l_c**2)) + float(means[c] @ means[c]) - m_ind
        ) - float(np.sum(np.log(np.diag(l_c))))
    value = exp_ll - kl_total
    if not want_grads:
        return value, None, None, None

    probs = softmax(f_draws, axis=2)
    one_hot = np.zeros((n_lab, n_classes))
    one_hot[np.arange(n_lab), y_idx] = 1.0
    resid = one_hot[None, :, :] - probs
    g_mu = resid.mean(axis=0)
    g_var = (resid * eps).mean(axis=0) / (2.0 * sd)

    # Variational gradients and the V-adjoint, class by class.
    g_means = np.empty_like(means)
    g_factors = np.empty_like(factors)
    tril = np.tril(np.ones((m_ind, m_ind)))
    gvs = g_var.sum(axis=1)
    v_bar = -2.0 * v_mat * gvs[None, :]
    for c in range(n_classes):
        l_c = factors[c]
        g_means[c] = v_mat @ g_mu[:, c] - means[c]
        w_c = l_c.T @ v_mat
        w_bar = 2.0 * w_c * g_var[:, c][None, :]
        g_l = v_mat @ w_bar.T - l_c
        g_l[np.arange(m_ind), np.arange(m_ind)] += 1.0 / np.diag(l_c)
        g_factors[c] = g_l * tril
        v_bar += np.outer(means[c], g_mu[:, c]) + l_c @ w_bar

    # Covariance adjoints: cross block, then the inducing block through the
    # triangular solve and the Cholesky factorization.
    g_kzn = solve_triangular(chol_a, v_bar, lower=True, trans="T", check_finite=False)
    chol_bar = -g_kzn @ v_mat.T
    g_a = _chol_backward(chol_a, chol_bar)
    g_knn = gvs

    n_sup = c_ss.shape[0]
    adjoint = np.zeros((n_sup, n_sup))
    adjoint[np.ix_(pos_z, pos_z)] += g_a
    adjoint[np.ix_(pos_z, pos_n)] += g_kzn
    adjoint[pos_n, pos_n] += g_knn
    adjoint = 0.5 * (adjoint + adjoint.T)
    return value, g_means, g_factors, adjoint


def elbo(
    model: WaveletGPClassifier,
    state: VariationalState,
    y_labels: np.ndarray,
    mc_samples: int = DEFAULT_MC_SAMPLES,
    seed: int = 0,
    inducing_indices: np.ndarray | None = None,
) -> float:
    """Monte Carlo ELBO of the labeled nodes; deterministic per seed."""
    y = _checked_labels(model, y_labels)
    z = model.labeled_indices if inducing_indices is None else np.asarray(inducing_indices)
    if state.n_inducing != len(z) or state.n_classes != model.n_classes:
        raise ValueError("state shape does not match inducing set and class count")
    sup, pos_z, pos_n = _support(z, model.labeled_indices)
    ws = CovarianceWorkspace(model)
    ev = ws.evaluate(model.filter_spec)
    c_ss = ev.block(sup, sup, model.feature_kernel.variance)
    rng = np.random.default_rng(seed)
    eps = rng.standard_normal((mc_samples, len(y), model.n_classes))
    value, _, _, _ = _elbo_core(c_ss, pos_z, pos_n, state.means, state.factors, y, eps, False)
    return value


def _checked_labels(model: WaveletGPClassifier, y_labels: np.ndarray) -> np.ndarray:
    y = np.asarray(y_labels, dtype=np.int64)
    if y.shape != model.labeled_indices.shape:
        raise ValueError("labels must align with labeled indices")
    if y.min() < 0 or y.max() >= model.n_classes:
        raise ValueError("class index outside [0, n_classes)")
    return y


def _pack_state(means, factors, tril_idx, diag_mask):
    vech = factors[:, tril_idx[0], tril_idx[1]].copy()
    vech[:, diag_mask] = np.log(vech[:, diag_mask])
    return np.concatenate([means.ravel(), vech.ravel()])


def _unpack_state(packed, n_classes, m_ind, tril_idx, diag_mask):
    n_mean = n_classes * m_ind
    means = packed[:n_mean].reshape(n_classes, m_ind)
    vech = packed[n_mean:].reshape(n_classes, -1).copy()
    vech[:, diag_mask] = np.exp(vech[:, diag_mask])
    factors = np.zeros((n_classes, m_ind, m_ind))
    factors[:, tril_idx[0], tril_idx[1]] = vech
    return means, factors


def fit_variational(
    model: WaveletGPClassifier,
    y_labels: np.ndarray,
    config: VariationalFitConfig = VariationalFitConfig(),
) -> VariationalFitResult:
    """Joint Adam ascent on variational and kernel parameters.

    The inducing set defaults to all labeled nodes; pass ``config.inducing``
    to subsample it uniformly. Fresh Monte Carlo draws per epoch make the
    trace noisy; the best ELBO seen selects the returned parameters.
    """
    y = _checked_labels(model, y_labels)
    seed_seq = np.random.SeedSequence(config.seed)
    subsample_rng = np.random.default_rng(seed_seq.spawn(1)[0])
    if config.inducing is None or config.inducing >= len(model.labeled_indices):
        z = model.labeled_indices
    else:
        z = np.sort(subsample_rng.choice(model.labeled_indices, config.inducing, replace=False))
    sup, pos_z, pos_n = _support(z, model.labeled_indices)
    m_ind = len(z)
    n_classes = model.n_classes

    spec0 = model.filter_spec
    fit_kernel = config.fit_kernel
    if fit_kernel and not isinstance(spec0, FilterSpec):
        raise TypeError("kernel fitting needs a FilterSpec filter")
    kernel0 = model.feature_kernel
    n_scale = spec0.n_params if fit_kernel else 0
    n_var = kernel0.n_params if fit_kernel else 0

    ws = CovarianceWorkspace(model)
    tril_idx = np.tril_indices(m_ind)
    diag_mask = tril_idx[0] == tril_idx[1]

    # Start at the prior: in whitened coordinates that is zero means with
    # identity factors, regardless of the kernel.
    means0 = np.zeros((n_classes, m_ind))
    factors0 = np.broadcast_to(np.eye(m_ind), (n_classes, m_ind, m_ind)).copy()
    packed0 = _pack_state(means0, factors0, tril_idx, diag_mask)
    if fit_kernel:
        tail = [np.log(spec0.scales())]
        if n_var:
            tail.append([math.log(kernel0.variance)])
        packed0 = np.concatenate([packed0] + [np.asarray(t) for t in tail])

    n_state = n_classes * m_ind + n_classes * len(tril_idx[0])
    epoch_seeds = seed_seq.spawn(config.max_epochs + 1)
    epoch_counter = [0]

    def split(packed):
        means, factors = _unpack_state(packed[:n_state], n_classes, m_ind, tril_idx, diag_mask)
        spec, variance = spec0, kernel0.variance
        if fit_kernel:
            spec = spec0.with_scales(np.exp(packed[n_state:n_state + n_scale]))
            if n_var:
                variance = float(np.exp(packed[n_state + n_scale]))
        return means, factors, spec, variance

    def value_and_grad(packed):
        means, factors, spec, variance = split(packed)
        rng = np.random.default_rng(epoch_seeds[min(epoch_counter[0], config.max_epochs)])
        epoch_counter[0] += 1
        eps = rng.standard_normal((config.mc_samples, len(y), n_classes))
        try:
            ev = ws.evaluate(spec)
            c_ss = ev.block(sup, sup, variance)
            value, g_means, g_factors, adjoint = _elbo_core(
                c_ss, pos_z, pos_n, means, factors, y, eps, True
            )
        except np.linalg.LinAlgError:
            return -np.inf, np.zeros_like(packed)
        g_vech = g_factors[:, tril_idx[0], tril_idx[1]]
        g_vech[:, diag_mask] *= factors[:, tril_idx[0], tril_idx[1]][:, diag_mask]
        grads = [g_means.ravel(), g_vech.ravel()]
        if fit_kernel:
            grads.append(ev.scale_gradients(spec, adjoint, sup, variance) * spec.scales())
            if n_var:
                grads.append([float(np.sum(adjoint * c_ss))])
        return value, np.concatenate([np.asarray(g) for g in grads])

    res = adam_maximize(
        value_and_grad, packed0, lr=config.lr, max_iters=config.max_epochs
    )
    means_f, factors_f, spec_f, var_f = split(res.x)
    fitted = replace(
        model, filter_spec=spec_f, feature_kernel=kernel0.with_variance(var_f)
        if kernel0.n_params else kernel0,
    )
    ev_f = ws.evaluate(spec_f)
    k_zz = ev_f.block(z, z, var_f)
    return VariationalFitResult(
        model=fitted,
        state=VariationalState(means=means_f, factors=factors_f),
        inducing=InducingSet(indices=z, k_zz=k_zz),
        elbo_trace=res.trace,
        best_elbo=res.value,
    )


def predict_class(
    model: WaveletGPClassifier,
    state: VariationalState,
    inducing: InducingSet,
    query_indices: np.ndarray,
    mc_samples: int = 256,
    seed: int = 0,
) -> ClassPrediction:
    """Class probabilities and predicted-class probability spread at queries.

    Probabilities are Monte Carlo averages of the softmax over latent draws;
    the reported variance is the across-draw variance of the probability
    assigned to each node's predicted class.
    """
    query = np.asarray(query_indices, dtype=np.int64)
    if query.size and (query.min() < 0 or query.max() >= model.n_nodes):
        raise ValueError("query index out of range")
    sup, pos_z, pos_q = _support(inducing.indices, query)
    ws = CovarianceWorkspace(model)
    ev = ws.evaluate(model.filter_spec)
    c_ss = ev.block(sup, sup, model.feature_kernel.variance)
    mu, var, _, _ = _marginals(c_ss, pos_z, pos_q, state.means, state.factors)
    rng = np.random.default_rng(seed)
    eps = rng.standard_normal((mc_samples, len(query), model.n_classes))
    f_draws = mu[None, :, :] + np.sqrt(var)[None, :, :] * eps
    probs_draws = softmax(f_draws, axis=2)
    probs = probs_draws.mean(axis=0)
    classes = np.argmax(probs, axis=1)
    picked = probs_draws[:, np.arange(len(query)), classes]
    return ClassPrediction(probabilities=probs, variance=picked.var(axis=0))


def rejection_curve(
    probabilities: np.ndarray,
    variances: np.ndarray,
    y_true: np.ndarray,
    thresholds: np.ndarray,
) -> list[RejectionPoint]:
    """Accuracy over nodes whose predictive variance is below each threshold."""
    probabilities = np.asarray(probabilities)
    variances = np.asarray(variances, dtype=np.float64)
    y_true = np.asarray(y_true, dtype=np.int64)
    if not (len(probabilities) == len(variances) == len(y_true)):
        raise ValueError("probability, variance, and label arrays must align")
    predicted = np.argmax(probabilities, axis=1)
    out = []
    for t in np.asarray(thresholds, dtype=np.float64):
        kept = variances <= t
        frac = float(kept.mean())
        acc = float(np.mean(predicted[kept] == y_true[kept])) if kept.any() else None
        out.append(RejectionPoint(threshold=float(t), kept_fraction=frac, accuracy=acc))
    return out


def gaussian_elbo(
    model: WaveletGPModel,
    means: np.ndarray,
    factor: np.ndarray,
    y_train: np.ndarray,
) -> float:
    """ELBO under a Gaussian likelihood; sanity bound on the regression lml.

    Uses the model's training nodes as inducing points with the whitened
    state convention: q(u) = N(Lk means, Lk factor factor^T Lk^T) for Lk the
    Cholesky factor of the training covariance block. For any state this is
    at most the exact log marginal likelihood of the same model.
    """
    y = np.asarray(y_train, dtype=np.float64)
    train = model.train_indices
    if y.shape != train.shape:
        raise ValueError("labels must align with train indices")
    sup, pos_z, pos_n = _support(train, train)
    ws = CovarianceWorkspace(model)
    ev = ws.evaluate(model.filter_spec)
    c_ss = ev.block(sup, sup, model.feature_kernel.variance)
    mu, var, _, _ = _marginals(
        c_ss, pos_z, pos_n, means[None, :], factor[None, :, :]
    )
    noise = model.noise_variance
    m_ind = len(train)
    fit = -0.5 * np.sum((y - mu[:, 0]) ** 2) / noise
    fit -= 0.5 * len(y) * math.log(2.0 * math.pi * noise)
    fit -= 0.5 * float(var[:, 0].sum()) / noise
    kl = 0.5 * (
        float(np.sum(factor**2)) + float(means @ means) - m_ind
    ) - float(np.sum(np.log(np.diag(factor))))
    return float(fit - kl)
