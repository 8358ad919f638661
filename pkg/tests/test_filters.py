"""Spectral filter profiles, their scale derivatives, and wavelet operators."""

import math

import numpy as np
import pytest

from wavegp import (
    FilterSpec,
    MotherWavelet,
    combined_filter,
    evaluate_filter,
    exact_wavelet_matrix,
    filter_gradient,
    impulse_response,
    eigendecompose,
    normalized_laplacian,
)
from wavegp.filters import (
    low_pass,
    low_pass_scale_derivative,
    mexican_hat,
    mexican_hat_scale_derivative,
    morlet,
    morlet_scale_derivative,
)
from conftest import random_connected_graph


def test_mexican_hat_peak_location_and_value():
    # the band profile peaks at beta * sqrt(2)
    beta = 1.2
    lam = np.linspace(1e-4, 6.0, 20000)
    vals = mexican_hat(lam, beta)
    peak = lam[np.argmax(vals)]
    assert peak == pytest.approx(beta * math.sqrt(2.0), abs=1e-3)
    assert mexican_hat(np.array([beta * math.sqrt(2.0)]), beta)[0] == pytest.approx(
        0.9024692472756121, rel=1e-12
    )


def test_mexican_hat_frozen_value():
    assert mexican_hat(np.array([2.0]), 6.0)[0] == pytest.approx(
        0.12892196529552102, rel=1e-12
    )


def test_low_pass_values():
    assert low_pass(np.array([0.0]), 12.0)[0] == 1.0
    assert low_pass(np.array([2.0]), 12.0)[0] == pytest.approx(0.04)


def test_morlet_unit_peak():
    for beta in (0.5, 1.0, 1.7):
        assert morlet(np.array([beta]), beta)[0] == pytest.approx(1.0)
        # half width at the 1/sqrt(e) level sits at beta/2
        assert morlet(np.array([beta + beta / 2.0]), beta)[0] == pytest.approx(
            math.exp(-0.5)
        )


@pytest.mark.parametrize(
    "fn,dfn",
    [
        (mexican_hat, mexican_hat_scale_derivative),
        (morlet, morlet_scale_derivative),
        (low_pass, low_pass_scale_derivative),
    ],
)
def test_scale_derivatives_match_finite_differences(fn, dfn, rng):
    lam = np.linspace(0.0, 2.0, 41)
    for _ in range(20):
        scale = float(rng.uniform(0.2, 10.0))
        h = 1e-6 * scale
        fd = (fn(lam, scale + h) - fn(lam, scale - h)) / (2 * h)
        np.testing.assert_allclose(dfn(lam, scale), fd, atol=1e-6, rtol=1e-5)


class TestFilterSpec:
    def test_param_layout(self):
        spec = FilterSpec(low_pass_scale=12.0, band_scales=(1.2, 6.0))
        assert spec.n_params == 3
        assert spec.param_names == ("alpha", "beta_1", "beta_2")
        np.testing.assert_allclose(spec.scales(), [12.0, 1.2, 6.0])

    def test_scales_round_trip(self):
        spec = FilterSpec(low_pass_scale=2.0, band_scales=(0.7,))
        new = spec.with_scales(np.array([5.0, 1.1]))
        assert new.low_pass_scale == 5.0
        assert new.band_scales == (1.1,)
        assert new.mother is spec.mother

    def test_bands_only_spec(self):
        spec = FilterSpec(low_pass_scale=None, band_scales=(1.0, 2.0))
        assert spec.n_params == 2
        assert spec.param_names == ("beta_1", "beta_2")

    def test_rejects_empty_and_nonpositive(self):
        with pytest.raises(ValueError):
            FilterSpec(low_pass_scale=None, band_scales=())
        with pytest.raises(ValueError):
            FilterSpec(low_pass_scale=-1.0, band_scales=(1.0,))
        with pytest.raises(ValueError):
            FilterSpec(low_pass_scale=1.0, band_scales=(0.0,))

    def test_json_round_trip(self):
        spec = FilterSpec(low_pass_scale=3.0, band_scales=(0.9, 2.2),
                          mother=MotherWavelet.MORLET)
        back = FilterSpec.from_json_dict(spec.to_json_dict())
        assert back.low_pass_scale == spec.low_pass_scale
        assert back.band_scales == spec.band_scales
        assert back.mother is spec.mother


def test_combined_filter_is_sum_of_parts():
    spec = FilterSpec(low_pass_scale=12.0, band_scales=(1.2, 6.0))
    lam = np.linspace(0.0, 2.0, 7)
    expect = low_pass(lam, 12.0) + mexican_hat(lam, 1.2) + mexican_hat(lam, 6.0)
    np.testing.assert_allclose(combined_filter(spec, lam), expect, atol=1e-14)


def test_evaluate_filter_accepts_callable():
    lam = np.linspace(0.0, 2.0, 5)
    np.testing.assert_allclose(evaluate_filter(lambda x: x**2, lam), lam**2)


def test_filter_gradient_matches_finite_differences(rng):
    lam = np.linspace(0.0, 2.0, 31)
    for mother in MotherWavelet:
        for _ in range(10):
            spec = FilterSpec(
                low_pass_scale=float(rng.uniform(0.5, 15.0)),
                band_scales=tuple(rng.uniform(0.3, 5.0, 2)),
                mother=mother,
            )
            grad = filter_gradient(spec, lam)
            assert grad.shape == (3, 31)
            s0 = spec.scales()
            for k in range(3):
                h = 1e-6 * s0[k]
                sp = s0.copy(); sp[k] += h
                sm = s0.copy(); sm[k] -= h
                fd = (combined_filter(spec.with_scales(sp), lam)
                      - combined_filter(spec.with_scales(sm), lam)) / (2 * h)
                np.testing.assert_allclose(grad[k], fd, atol=1e-6, rtol=1e-5)


class TestWaveletMatrix:
    def test_matches_eigen_reconstruction(self, rng):
        g = random_connected_graph(rng, 20, weighted=True)
        dec = eigendecompose(normalized_laplacian(g))
        spec = FilterSpec(low_pass_scale=5.0, band_scales=(1.0,))
        wm = exact_wavelet_matrix(dec, spec)
        gv = combined_filter(spec, dec.eigenvalues)
        expect = (dec.eigenvectors * gv) @ dec.eigenvectors.T
        np.testing.assert_allclose(wm.matrix, expect, atol=1e-10)
        np.testing.assert_allclose(wm.matrix, wm.matrix.T, atol=1e-14)

    def test_identity_filter_gives_identity(self, rng):
        g = random_connected_graph(rng, 12)
        dec = eigendecompose(normalized_laplacian(g))
        wm = exact_wavelet_matrix(dec, lambda lam: np.ones_like(lam))
        np.testing.assert_allclose(wm.matrix, np.eye(12), atol=1e-10)


def test_impulse_response_row_of_operator(rng):
    g = random_connected_graph(rng, 16)
    dec = eigendecompose(normalized_laplacian(g))
    spec = FilterSpec(low_pass_scale=2.0, band_scales=(0.8,))
    wm = exact_wavelet_matrix(dec, spec)
    for node in (0, 7, 15):
        np.testing.assert_allclose(
            impulse_response(dec, spec, node), wm.matrix[node], atol=1e-10
        )


def test_impulse_response_spread_grows_with_smoothing():
    # heat-kernel filters: a weak one keeps the delta local, a strong one
    # pushes relative mass out to the far end of the path
    import wavegp

    g = wavegp.build_graph(
        6, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0), (4, 5, 1.0)]
    )
    dec = eigendecompose(normalized_laplacian(g))
    weak = impulse_response(dec, lambda lam: np.exp(-0.1 * lam), 0)
    strong = impulse_response(dec, lambda lam: np.exp(-8.0 * lam), 0)
    assert abs(weak[5]) / abs(weak[0]) < abs(strong[5]) / abs(strong[0])
