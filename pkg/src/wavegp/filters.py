"""Spectral filter functions and exact wavelet filter matrices.

A multi-scale filter combines an optional low-pass response
``h_a(x) = 1 / (1 + a x)`` with a sum of band-pass responses drawn from a
mother wavelet family, evaluated on the Laplacian spectrum ``[0, 2]``:

    g(x) = h_a(x) + sum_l b_{s_l}(x)

The band-pass families are the Mexican Hat,

    b_s(x) = (2 sqrt(2) / (sqrt(3) pi^{1/4})) (x/s)^2 exp(-(x/s)^2 / 2),

which peaks at ``x = s * sqrt(2)``, and a Gaussian bump ("Morlet-style"
frequency profile) of unit height centered at ``x = s`` with width ``s / 2``.

Applying a filter through the Laplacian eigenbasis yields the dense wavelet
filter matrix ``W = U g(Lambda) U^T``, symmetric and PSD for nonnegative
filter responses.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Callable, Union

import numpy as np

from .graphs import SpectralDecomposition

# Normalization constant of the Mexican Hat profile.
MEXICAN_HAT_CONST = 2.0 * math.sqrt(2.0) / (math.sqrt(3.0) * math.pi**0.25)

# Width of the Gaussian band profile relative to its center scale.
MORLET_WIDTH_RATIO = 0.5


class MotherWavelet(str, enum.Enum):
    MEXICAN_HAT = "mexican_hat"
    MORLET = "morlet"


@dataclass(frozen=True)
class FilterSpec:
    """Scales of a combined multi-scale spectral filter.

    Attributes:
        low_pass_scale: scale of the low-pass term, or None to omit it.
        band_scales: scales of the band-pass terms (may be empty).
        mother: band-pass family used for all band terms.
    """

    low_pass_scale: float | None
    band_scales: tuple[float, ...]
    mother: MotherWavelet = MotherWavelet.MEXICAN_HAT

    def __post_init__(self):
        object.__setattr__(self, "band_scales", tuple(float(b) for b in self.band_scales))
        if self.low_pass_scale is not None and self.low_pass_scale <= 0:
            raise ValueError(f"low-pass scale must be positive, got {self.low_pass_scale}")
        if any(b <= 0 for b in self.band_scales):
            raise ValueError(f"band scales must be positive, got {self.band_scales}")
        if self.low_pass_scale is None and not self.band_scales:
            raise ValueError("filter needs a low-pass term, band terms, or both")

    @property
    def n_bands(self) -> int:
        return len(self.band_scales)

    @property
    def n_params(self) -> int:
        return (self.low_pass_scale is not None) + self.n_bands

    @property
    def param_names(self) -> tuple[str, ...]:
        names = [] if self.low_pass_scale is None else ["alpha"]
        names += [f"beta_{l + 1}" for l in range(self.n_bands)]
        return tuple(names)

    def scales(self) -> np.ndarray:
        """All scales as a flat vector, low-pass first when present."""
        head = [] if self.low_pass_scale is None else [self.low_pass_scale]
        return np.array(head + list(self.band_scales), dtype=np.float64)

    def with_scales(self, scales: np.ndarray) -> "FilterSpec":
        """Rebuild a FilterSpec from a flat scale vector (inverse of scales())."""
        scales = np.asarray(scales, dtype=np.float64)
        if scales.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} scales, got {scales.shape}")
        if self.low_pass_scale is None:
            return replace(self, band_scales=tuple(scales))
        return replace(self, low_pass_scale=float(scales[0]), band_scales=tuple(scales[1:]))

    def to_json_dict(self) -> dict:
        return {
            "mother": self.mother.value,
            "alpha": self.low_pass_scale,
            "betas": list(self.band_scales),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "FilterSpec":
        return cls(
            low_pass_scale=data.get("alpha"),
            band_scales=tuple(data.get("betas", ())),
            mother=MotherWavelet(data.get("mother", "mexican_hat")),
        )


# A filter argument is either a FilterSpec or a bare callable on the spectrum
# (the latter is how diagnostic filters enter in tests and demos).
FilterLike = Union[FilterSpec, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True, eq=False)
class WaveletMatrix:
    """Dense wavelet filter matrix ``W = U g(Lambda) U^T`` plus what built it."""

    matrix: np.ndarray
    spec: FilterLike
    decomposition: SpectralDecomposition


def mexican_hat(lam, beta: float):
    """Mexican Hat band-pass response at spectrum position ``lam``."""
    if beta <= 0:
        raise ValueError(f"scale must be positive, got {beta}")
    u = np.asarray(lam, dtype=np.float64) / beta
    out = MEXICAN_HAT_CONST * u**2 * np.exp(-0.5 * u**2)
    return out if out.ndim else float(out)


def mexican_hat_scale_derivative(lam, beta: float):
    """Analytic derivative of :func:`mexican_hat` with respect to its scale."""
    if beta <= 0:
        raise ValueError(f"scale must be positive, got {beta}")
    u = np.asarray(lam, dtype=np.float64) / beta
    out = MEXICAN_HAT_CONST * u**2 * np.exp(-0.5 * u**2) * (u**2 - 2.0) / beta
    return out if out.ndim else float(out)


def morlet(lam, beta: float):
    """Unit-height Gaussian band profile centered at ``beta``, width ``beta/2``."""
    if beta <= 0:
        raise ValueError(f"scale must be positive, got {beta}")
    sigma = MORLET_WIDTH_RATIO * beta
    r = (np.asarray(lam, dtype=np.float64) - beta) / sigma
    out = np.exp(-0.5 * r**2)
    return out if out.ndim else float(out)


def morlet_scale_derivative(lam, beta: float):
    """Analytic derivative of :func:`morlet` with respect to its scale."""
    if beta <= 0:
        raise ValueError(f"scale must be positive, got {beta}")
    lam = np.asarray(lam, dtype=np.float64)
    sigma = MORLET_WIDTH_RATIO * beta
    r = (lam - beta) / sigma
    # The width is tied to the center, so both shift and dilation contribute.
    out = np.exp(-0.5 * r**2) * r * lam / (MORLET_WIDTH_RATIO * beta**2)
    return out if out.ndim else float(out)


def low_pass(lam, alpha: float):
    """Low-pass response ``1 / (1 + alpha * lam)``; equals 1 at ``lam = 0``."""
    if alpha <= 0:
        raise ValueError(f"scale must be positive, got {alpha}")
    out = 1.0 / (1.0 + alpha * np.asarray(lam, dtype=np.float64))
    return out if out.ndim else float(out)


def low_pass_scale_derivative(lam, alpha: float):
    """Analytic derivative of :func:`low_pass` with respect to its scale."""
    if alpha <= 0:
        raise ValueError(f"scale must be positive, got {alpha}")
    lam = np.asarray(lam, dtype=np.float64)
    out = -lam / (1.0 + alpha * lam) ** 2
    return out if out.ndim else float(out)


_BAND_FUNCS = {
    MotherWavelet.MEXICAN_HAT: (mexican_hat, mexican_hat_scale_derivative),
    MotherWavelet.MORLET: (morlet, morlet_scale_derivative),
}


def combined_filter(spec: FilterSpec, lam):
    """Evaluate the combined low-pass plus band-pass filter at ``lam``."""
    lam_arr = np.asarray(lam, dtype=np.float64)
    band, _ = _BAND_FUNCS[spec.mother]
    out = np.zeros_like(lam_arr, dtype=np.float64)
    if spec.low_pass_scale is not None:
        out = out + low_pass(lam_arr, spec.low_pass_scale)
    for beta in spec.band_scales:
        out = out + band(lam_arr, beta)
    return out if out.ndim else float(out)


def evaluate_filter(filter_like: FilterLike, lam) -> np.ndarray:
    """Evaluate a FilterSpec or a bare callable on the spectrum."""
    if isinstance(filter_like, FilterSpec):
        return combined_filter(filter_like, lam)
    return np.asarray(filter_like(np.asarray(lam, dtype=np.float64)), dtype=np.float64)


def filter_gradient(spec: FilterSpec, lam) -> np.ndarray:
    """Partial derivatives of the combined filter with respect to each scale.

    Returns an array of shape ``(spec.n_params,) + shape(lam)``, ordered as
    ``spec.param_names`` (low-pass scale first when present, then each band
    scale).
    """
    lam_arr = np.asarray(lam, dtype=np.float64)
    _, band_deriv = _BAND_FUNCS[spec.mother]
    rows = []
    if spec.low_pass_scale is not None:
        rows.append(np.broadcast_to(
            low_pass_scale_derivative(lam_arr, spec.low_pass_scale), lam_arr.shape
        ))
    for beta in spec.band_scales:
        rows.append(np.broadcast_to(band_deriv(lam_arr, beta), lam_arr.shape))
    return np.array(rows, dtype=np.float64)


def exact_wavelet_matrix(dec: SpectralDecomposition, filter_like: FilterLike) -> WaveletMatrix:
    """Materialize ``W = U g(Lambda) U^T`` for the given filter.

    Symmetric by construction and PSD whenever the filter response is
    nonnegative on the spectrum.
    """
    g = evaluate_filter(filter_like, dec.eigenvalues)
    if g.shape != dec.eigenvalues.shape:
        raise ValueError("filter evaluation changed shape; expected one value per eigenvalue")
    u = dec.eigenvectors
    w = (u * g[None, :]) @ u.T
    w = 0.5 * (w + w.T)
    return WaveletMatrix(matrix=w, spec=filter_like, decomposition=dec)


def impulse_response(
    dec: SpectralDecomposition, filter_like: FilterLike, node: int
) -> np.ndarray:
    """Response ``W delta_node``: one column of the wavelet filter matrix."""
    n = dec.n_nodes
    if not 0 <= node < n:
        raise ValueError(f"node {node} out of range for {n} nodes")
    g = evaluate_filter(filter_like, dec.eigenvalues)
    u = dec.eigenvectors
    return (u * g[None, :]) @ u[node, :]
