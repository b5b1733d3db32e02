from math import factorial

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kdvk.gevrey import (
    AssumptionError,
    DampingProfile,
    GevreyOverflowError,
    GevreyWeight,
    RadiusFitError,
    a_sigma_norm,
    apply_lambda_sigma,
    check_assumptions,
    constant_damping,
    cosine_bump_damping,
    derivative_sup_norms,
    estimate_radius,
    gevrey_norm,
    interpolation_gap,
    sine_damping,
)
from kdvk.spectral import Field, l2_norm, make_grid

from conftest import random_real_field, sech_field


def a_sigma_oracle(mean, eps, sigma, K=64):
    # sup|a| = mean + |eps|; every derivative of eps*sin has sup |eps|
    return (mean + abs(eps)) + abs(eps) * sum((k + 1) ** 0.25 * sigma**k / factorial(k) for k in range(1, K + 1))


def test_weight_rejects_negative():
    with pytest.raises(ValueError):
        GevreyWeight(-0.1)


def test_sigma_zero_is_l2(rng):
    g = make_grid(128, 20.0)
    f = random_real_field(g, rng)
    assert gevrey_norm(f, 0.0) == pytest.approx(l2_norm(f), rel=1e-14)
    assert gevrey_norm(f, GevreyWeight(0.0)) == pytest.approx(l2_norm(f), rel=1e-14)


def test_single_coefficient(grid_2pi):
    c = np.zeros(grid_2pi.n_points, complex)
    c[3] = 2.0 - 1.0j
    f = Field.from_spectral(grid_2pi, c, real=False)
    expected = abs(c[3]) * np.exp(0.7 * 3) * np.sqrt(grid_2pi.dxi)
    assert gevrey_norm(f, 0.7) == pytest.approx(expected, rel=1e-14)


def test_sech_norm_against_closed_form():
    g = make_grid(4096, 64 * np.pi)
    f = sech_field(g)
    xi = g.wavenumbers
    exact = np.sqrt(np.pi / 2) / np.cosh(np.pi * xi / 2)
    oracle = np.sqrt(np.sum(np.exp(2 * np.abs(xi)) * exact**2) * g.dxi)
    assert gevrey_norm(f, 1.0) == pytest.approx(oracle, rel=1e-6)


def test_overflow_guard():
    g = make_grid(4096, 2 * np.pi)
    f = Field.from_physical(g, np.cos(g.x))
    with pytest.raises(GevreyOverflowError):
        gevrey_norm(f, 1.0)


def test_lambda_identity_at_zero(grid_2pi, rng):
    f = random_real_field(grid_2pi, rng)
    assert np.array_equal(apply_lambda_sigma(f, 0.0).spectral, f.spectral)


def test_lambda_matches_norm(grid_2pi, rng):
    f = random_real_field(grid_2pi, rng)
    assert l2_norm(apply_lambda_sigma(f, 0.4)) == pytest.approx(gevrey_norm(f, 0.4), rel=1e-13)


def test_lambda_semigroup(grid_2pi, rng):
    f = random_real_field(grid_2pi, rng)
    lhs = apply_lambda_sigma(apply_lambda_sigma(f, 0.2), 0.3).spectral
    rhs = apply_lambda_sigma(f, 0.5).spectral
    assert np.linalg.norm(lhs - rhs) <= 1e-10 * np.linalg.norm(rhs)


def test_lambda_linear(grid_2pi, rng):
    f, h = random_real_field(grid_2pi, rng), random_real_field(grid_2pi, rng)
    comb = Field.from_spectral(grid_2pi, 2.0 * f.spectral - 3.0 * h.spectral)
    lhs = apply_lambda_sigma(comb, 0.3).spectral
    rhs = 2.0 * apply_lambda_sigma(f, 0.3).spectral - 3.0 * apply_lambda_sigma(h, 0.3).spectral
    assert np.linalg.norm(lhs - rhs) <= 1e-10 * np.linalg.norm(rhs)


def test_lambda_keeps_realness(grid_2pi, rng):
    out = apply_lambda_sigma(random_real_field(grid_2pi, rng), 0.5)
    assert out.real
    assert np.max(np.abs(np.fft.ifft(out.spectral).imag)) < 1e-13


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), s1=st.floats(0, 2), s2=st.floats(0, 2))
def test_norm_monotone_in_sigma(seed, s1, s2):
    g = make_grid(64, 2 * np.pi)
    f = random_real_field(g, np.random.default_rng(seed))
    lo, hi = sorted((s1, s2))
    assert gevrey_norm(f, lo) <= gevrey_norm(f, hi) * (1 + 1e-14)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), sigma=st.floats(0, 3), decay=st.floats(0.05, 2))
def test_interpolation_inequality(seed, sigma, decay):
    g = make_grid(64, 2 * np.pi)
    f = random_real_field(g, np.random.default_rng(seed), decay)
    assert interpolation_gap(f, sigma) >= -1e-10


# -- damping class ----------------------------------------------------------------


def test_constant_a_norm():
    g = make_grid(64, 2 * np.pi)
    a = constant_damping(g, 1.7)
    assert a_sigma_norm(a, 2.0) == pytest.approx(1.7, rel=1e-14)


@pytest.mark.parametrize("mean, eps, sigma", [(1.0, 0.3, 1.0), (2.0, 0.5, 0.5), (1.0, 0.1, 2.0)])
def test_sine_a_norm_against_series(mean, eps, sigma):
    g = make_grid(64, 2 * np.pi)
    a = sine_damping(g, mean, eps, 1.0)
    assert a_sigma_norm(a, sigma) == pytest.approx(a_sigma_oracle(mean, eps, sigma), rel=1e-10)


def test_sine_a_norm_on_long_period():
    g = make_grid(256, 8 * np.pi)
    a = sine_damping(g, 1.0, 0.25, 1.0)
    assert a_sigma_norm(a, 1.0) == pytest.approx(a_sigma_oracle(1.0, 0.25, 1.0), rel=1e-10)


@pytest.mark.parametrize("builder", [
    lambda g: sine_damping(g, 1.0, 0.5, 1.0),
    lambda g: cosine_bump_damping(g, 1.0, 0.5, 2.0),
    lambda g: constant_damping(g, 0.3),
])
def test_a_norm_monotone(builder):
    a = builder(make_grid(64, 2 * np.pi))
    vals = [a_sigma_norm(a, s) for s in (0.0, 0.25, 0.5, 1.0, 2.0)]
    assert all(x <= y * (1 + 1e-14) for x, y in zip(vals, vals[1:]))


def test_derivative_sup_norms_closed_form():
    g = make_grid(128, 2 * np.pi)
    a = cosine_bump_damping(g, 1.0, 0.5, 2.0)  # 1 + 0.5(1 + cos 2x)
    norms = derivative_sup_norms(a.field, 12)
    expected = np.array([2.0] + [0.5 * 2.0**k for k in range(1, 13)])
    assert np.allclose(norms, expected, rtol=1e-8)


def test_a_norm_uncertified_series():
    # band limit 30, sigma 5: sigma*R/(K+1) > 1 so the tail cannot be bounded
    g = make_grid(128, 2 * np.pi)
    a = sine_damping(g, 1.0, 0.1, 30.0)
    with pytest.raises(AssumptionError):
        a_sigma_norm(a, 5.0, K=16)


def test_assumptions_constant():
    g = make_grid(64, 2 * np.pi)
    rep = check_assumptions(constant_damping(g, 1.0), 1.0)
    assert rep["floor_pass"] and rep["summability_pass"]
    assert rep["a_norm"] == pytest.approx(1.0)


def test_assumptions_floor_fails():
    g = make_grid(64, 2 * np.pi)
    a = DampingProfile.from_field(Field.from_physical(g, 0.5 + np.sin(g.x)), 0.5)
    rep = check_assumptions(a, 1.0)
    assert not rep["floor_pass"]
    assert rep["grid_min"] == pytest.approx(-0.5, abs=1e-12)


def test_assumptions_small_oscillation():
    g = make_grid(64, 2 * np.pi)
    rep = check_assumptions(sine_damping(g, 1.0, 0.1, 1.0, gamma=0.9), 2.0)
    assert rep["floor_pass"] and rep["summability_pass"]
    assert rep["a_norm"] == pytest.approx(a_sigma_oracle(1.0, 0.1, 2.0), rel=1e-10)


def test_gamma_must_be_nonnegative():
    g = make_grid(64, 2 * np.pi)
    with pytest.raises(ValueError):
        DampingProfile.from_field(Field.from_physical(g, np.ones(64)), -1.0)


def test_periodicity_check():
    with pytest.raises(ValueError):
        sine_damping(make_grid(64, 2 * np.pi), 1.0, 0.5, 1.5)


# -- radius -----------------------------------------------------------------------


def test_radius_of_sech():
    g = make_grid(4096, 64 * np.pi)
    fit = estimate_radius(sech_field(g), (2.0, 20.0))
    assert fit.sigma_hat == pytest.approx(np.pi / 2, rel=0.05)
    assert not fit.entire_beyond_window
    assert np.isfinite(fit.residual)


def test_gaussian_flagged_entire():
    g = make_grid(4096, 64 * np.pi)
    f = Field.from_physical(g, np.exp(-((g.x - g.period / 2) ** 2)))
    assert estimate_radius(f, (2.0, 20.0)).entire_beyond_window


def test_single_mode_has_too_few_modes(grid_2pi):
    with pytest.raises(RadiusFitError):
        estimate_radius(Field.from_function(grid_2pi, np.cos), (0.5, 10.0))


def test_zero_field_rejected(grid_2pi):
    with pytest.raises(RadiusFitError):
        estimate_radius(Field.from_physical(grid_2pi, np.zeros(grid_2pi.n_points)))


def test_empty_window(sech_grid):
    with pytest.raises(RadiusFitError):
        estimate_radius(sech_field(sech_grid), (5.0, 5.0))


@pytest.mark.parametrize("s", [0.2, 0.5, 1.0])
def test_extra_decay_lowers_radius(s):
    g = make_grid(4096, 64 * np.pi)
    f = sech_field(g)
    base = estimate_radius(f, (2.0, 12.0)).sigma_hat
    damped = apply_lambda_sigma(f, -s)
    assert estimate_radius(damped, (2.0, 12.0)).sigma_hat == pytest.approx(base + s, abs=0.02)
