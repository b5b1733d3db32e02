from dataclasses import replace
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kdvk.gevrey import a_sigma_norm, constant_damping, gevrey_norm, sine_damping
from kdvk.probe import (
    HypothesisError,
    ProbeConfig,
    _Window,
    bilinear_ratio,
    draw_spacetime,
    draw_spectrum,
    draw_streams,
    probe_bilinear,
    probe_damping_product,
    probe_exponential_triangle,
    probe_lipschitz_data_map,
    probe_trilinear,
    probe_weight_inequality,
    summarize,
    trilinear_ratio,
    weight_ratio,
)
from kdvk.spectral import EquationParams, Field, dealiased_product_coeffs, make_grid

SMALL = ProbeConfig(n_samples=12, grid_sizes=(64, 128))
LINEAR = EquationParams(1.0, 1.0, 0.0, 0.0)


@pytest.fixture(scope="module")
def window():
    return _Window(SMALL, 64, EquationParams())


def spacetime(window, seed, k=1):
    rng = np.random.default_rng(seed)
    return [draw_spacetime(rng, SMALL, 32).spectra(window.grid, window.times, window.psi, window.p, SMALL.band_limit)
            for _ in range(k)]


# -- random draws -----------------------------------------------------------------------


def test_streams_are_reproducible():
    a = [r.standard_normal(3) for r in draw_streams(SMALL)]
    b = [r.standard_normal(3) for r in draw_streams(SMALL)]
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert not np.array_equal(a[0], a[1])


def test_spectrum_draw_is_real_and_nested():
    d = draw_spectrum(np.random.default_rng(0), 0.5, 3.0, 128)
    assert 0.5 <= d.rate <= 1.5
    coarse, fine = make_grid(64, 8 * np.pi), make_grid(256, 8 * np.pi)
    c64, c256 = d.on_grid(coarse), d.on_grid(fine)
    assert np.isrealobj(Field.from_spectral(coarse, c64).physical)
    assert np.allclose(Field.from_spectral(coarse, c64).spectral, c64, atol=1e-15)
    assert np.array_equal(c64[:32], c256[:32])


def test_band_limit_truncates():
    g = make_grid(128, 8 * np.pi)
    c = draw_spectrum(np.random.default_rng(1), 0.5, 3.0, 64).on_grid(g, band_limit=2.0)
    assert np.all(c[np.abs(g.wavenumbers) > 2.0] == 0)
    assert np.any(c[np.abs(g.wavenumbers) <= 2.0] != 0)


def test_summarize_drops_nan():
    s = summarize([1.0, float("nan"), 3.0, 2.0])
    assert s["count"] == 3 and s["max"] == 3.0 and s["median"] == 2.0
    assert summarize([float("nan")])["count"] == 0


# -- multilinear ratios ---------------------------------------------------------------------


def test_zero_draw_is_excluded(window):
    (u,) = spacetime(window, 3)
    assert np.isnan(bilinear_ratio(window, u, np.zeros_like(u), SMALL))
    assert np.isnan(trilinear_ratio(window, u, u, np.zeros_like(u), SMALL))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_bilinear_symmetric(window, seed):
    u, v = spacetime(window, seed, 2)
    assert bilinear_ratio(window, u, v, SMALL) == pytest.approx(bilinear_ratio(window, v, u, SMALL), rel=1e-12)


@pytest.mark.parametrize("seed", [0, 5])
def test_trilinear_permutation_invariant(window, seed):
    fields = spacetime(window, seed, 3)
    vals = [trilinear_ratio(window, *perm, SMALL) for perm in permutations(fields)]
    assert np.ptp(vals) <= 1e-12 * max(vals)


def test_bilinear_scale_invariant(window):
    u, v = spacetime(window, 7, 2)
    r = bilinear_ratio(window, u, v, SMALL)
    assert bilinear_ratio(window, 3.0 * u, -0.25 * v, SMALL) == pytest.approx(r, rel=1e-12)


@pytest.mark.parametrize("probe", [probe_bilinear, probe_trilinear])
def test_multilinear_probe_deterministic(probe):
    a = probe(SMALL).as_dict()
    b = probe(SMALL).as_dict()
    c = probe(replace(SMALL, workers=2)).as_dict()
    c["extra"]["config"]["workers"] = None
    assert a == b == c
    assert a["n_valid"] == SMALL.n_samples
    assert not a["reportable"]


def test_multilinear_probe_passes_small():
    rep = probe_bilinear(SMALL)
    assert rep.passed
    assert all(np.isfinite(rep.refinement_trend))


@pytest.mark.parametrize("b,b_prime", [(0.5, 0.65), (0.55, 0.5), (0.3, 0.9)])
def test_bilinear_hypotheses(b, b_prime):
    with pytest.raises(HypothesisError):
        probe_bilinear(replace(SMALL, b=b, b_prime=b_prime))


@pytest.mark.parametrize("b,b_prime", [(0.7, 0.8), (0.5, 0.65), (0.6, 0.5)])
def test_trilinear_hypotheses(b, b_prime):
    with pytest.raises(HypothesisError):
        probe_trilinear(replace(SMALL, b=b, b_prime=b_prime))


# -- damping product ---------------------------------------------------------------------------


def test_constant_damping_ratio_is_one():
    g = make_grid(128, SMALL.period)
    rep = probe_damping_product(SMALL, constant_damping(g, 1.0))
    assert rep.refinement_trend == pytest.approx([1.0, 1.0], abs=1e-12)
    assert rep.passed
    assert rep.extra["xsb"]["pass"]
    assert max(rep.extra["xsb"]["refinement_trend"]) <= 1.0 + 1e-12


def test_sine_damping_ratio_below_one():
    g = make_grid(128, SMALL.period)
    rep = probe_damping_product(SMALL, sine_damping(g, 1.0, 0.5, wavenumber=0.25))
    assert rep.passed
    assert max(rep.refinement_trend) <= 1.0


@pytest.mark.parametrize("k", [2, 3, 6])
@pytest.mark.parametrize("eps", [0.1, 0.5])
def test_damping_product_three_modes(k, eps):
    # a*cos(kx) = cos(kx) + eps/2 (sin((k+1)x) - sin((k-1)x)) for a = 1 + eps sin x
    sigma = 0.5
    g = make_grid(64, 2 * np.pi)
    a = sine_damping(g, 1.0, eps)
    u = Field.from_physical(g, np.cos(k * g.x))
    au = Field.from_spectral(g, dealiased_product_coeffs([a.field.spectral, u.spectral], g))
    expected = np.sqrt(np.pi * (np.exp(2 * sigma * k)
                                + eps**2 / 4 * (np.exp(2 * sigma * (k + 1)) + np.exp(2 * sigma * (k - 1)))))
    assert gevrey_norm(au, sigma) == pytest.approx(expected, rel=1e-12)
    assert gevrey_norm(au, sigma) <= a_sigma_norm(a, sigma) * gevrey_norm(u, sigma)


def test_damping_hypotheses():
    g = make_grid(128, SMALL.period)
    with pytest.raises(HypothesisError):
        probe_damping_product(replace(SMALL, damping_b_prime=0.1), constant_damping(g, 1.0))
    with pytest.raises(HypothesisError):
        probe_damping_product(replace(SMALL, damping_b=-0.1, damping_b_prime=-0.2), constant_damping(g, 1.0))


# -- weights and triangle ---------------------------------------------------------------------


@settings(max_examples=200, deadline=None)
@given(x=st.floats(-1e6, 1e6), y=st.floats(-1e6, 1e6), sign=st.sampled_from([1, -1]))
def test_weight_ratio_peetre(x, y, sign):
    # <x+y> <= <x><y> and <y> <= <x><x+y>
    assert weight_ratio(1.0, 1.0, x, y, sign) <= 1.0 + 1e-12
    assert weight_ratio(1.0, -1.0, x, y, sign) <= 1.0 + 1e-12


@pytest.mark.parametrize("a,b", [(1, 1), (1, -1), (2, 0.5), (0.5, 0)])
def test_weight_probe_stable(a, b):
    out = probe_weight_inequality(a, b)
    assert out["finite"]
    assert out["range_stable"]
    assert out["max_ratio"] <= 1.0 + 1e-12


def test_weight_probe_grows_outside_range():
    # a >= b but |b| > a: at x = -y the ratio is <y>^(1/2), so doubling the range gives about sqrt 2
    out = probe_weight_inequality(0.5, -1.0)
    assert out["max_ratio_doubled"] > 1.35 * out["max_ratio"]
    assert "range_stable" not in out


@pytest.mark.parametrize("a,b", [(0.5, 1.0), (-0.5, -1.0)])
def test_weight_hypotheses(a, b):
    with pytest.raises(HypothesisError):
        probe_weight_inequality(a, b)


@pytest.mark.parametrize("sigma", [0.0, 0.3, 1.0, 2.7])
def test_exponential_triangle(sigma):
    out = probe_exponential_triangle(sigma)
    assert out["pass"] and out["violations"] == 0
    assert out["equality_eta_zero"]


def test_exponential_triangle_rejects_negative():
    with pytest.raises(ValueError):
        probe_exponential_triangle(-1.0)


# -- Lipschitz data-to-solution map ---------------------------------------------------------------


def test_lipschitz_linear_contracts():
    g = make_grid(128, SMALL.period)
    rep = probe_lipschitz_data_map(replace(SMALL, n_samples=8), LINEAR, constant_damping(g, 1.0))
    assert rep.passed
    # linear, damped: ||u - v||_{G^s} decays, so the sup over t >= 0 is the t = 0 value
    assert max(rep.refinement_trend) <= 1.0 + 1e-14


def test_lipschitz_nonlinear_bounded():
    g = make_grid(128, SMALL.period)
    rep = probe_lipschitz_data_map(replace(SMALL, n_samples=8), EquationParams(), constant_damping(g, 1.0))
    assert rep.passed
    assert 1.0 <= max(rep.refinement_trend) < 2.0
    assert rep.extra["perturbations"] == [1e-3, 1e-4, 1e-5]
