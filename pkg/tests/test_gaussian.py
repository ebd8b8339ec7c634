import numpy as np
import pytest
from hypothesis import given, settings
from scipy.integrate import trapezoid

from conftest import random_symplectic, seeds
from metaplectic_up import (GaussianState, GridSpec, PolyGaussian, build_extremizer_directional,
                            build_frame, fourier, gamma_for_sharpness, harmonic_oscillator,
                            heisenberg_directional, l2_norm, multiplier, partial_fourier, sample,
                            transform_gaussian, transform_grid, transform_poly_gaussian)
from metaplectic_up.decay import smooth_bump
from metaplectic_up.gaussian import extremizer_evaluator, gaussian_moments, random_gaussian
from metaplectic_up.grid import weighted_moment


def brute_force_1d(A, B, C, D, f, xi, L=12.0, n=20001):
    # 1-D integral with B != 0, evaluated by the trapezoid rule
    t = np.linspace(-L, L, n)
    ker = np.exp(1j * np.pi * (A / B) * t ** 2)[None] * np.exp(-2j * np.pi * np.outer(xi, t) / B)
    vals = trapezoid(ker * f(t[:, None])[None], t, axis=1)
    return abs(B) ** -0.5 * np.exp(1j * np.pi * D / B * xi ** 2) * vals


@pytest.mark.parametrize("S", [fourier(1), harmonic_oscillator(1, 2.0, 0.4),
                               multiplier([[0.7]]) @ harmonic_oscillator(1, 1.0, 1.1)])
def test_oracle_matches_brute_force_integral(S):
    g = GaussianState(np.array([[0.3 + 1.1j]]), np.array([0.4 - 0.2j]), 0.8)
    xi = np.linspace(-3, 3, 41)
    ref = brute_force_1d(*(S.entries[i, j] for i, j in ((0, 0), (0, 1), (1, 0), (1, 1))), g, xi)
    got = transform_gaussian(S, g)(xi[:, None])
    # equal up to the global unimodular constant of the representation
    z = np.vdot(got, ref) / np.vdot(got, got)
    assert abs(abs(z) - 1) < 1e-9
    assert np.max(np.abs(ref - z * got)) < 1e-9 * np.max(np.abs(ref))


def test_identity_and_isotropic_fourier():
    g = GaussianState.isotropic(2, np.pi, center=[0.3, -0.5])
    h = transform_gaussian(harmonic_oscillator(2, 1.0, 0.0), g)
    assert np.allclose(h.Z, g.Z) and np.allclose(h.w, g.w) and h.c == pytest.approx(g.c)
    # exp(-pi|x|^2) is a fixed point of the Fourier transform
    h = transform_gaussian(fourier(2), GaussianState.isotropic(2))
    assert np.allclose(h.Z, 1j * np.eye(2)) and abs(abs(h.c) - 1) < 1e-12


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_unitarity(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 4))
    S = random_symplectic(rng, d)
    g = random_gaussian(rng, d)
    assert transform_gaussian(S, g).norm2() == pytest.approx(g.norm2(), rel=1e-8)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_composition_up_to_phase(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 3))
    S1, S2 = random_symplectic(rng, d, depth=2), random_symplectic(rng, d, depth=2)
    g = random_gaussian(rng, d)
    one = transform_gaussian(S1 @ S2, g)
    two = transform_gaussian(S1, transform_gaussian(S2, g))
    assert np.allclose(one.Z, two.Z, atol=1e-8)
    assert np.allclose(one.w, two.w, atol=1e-8)
    assert abs(one.c / two.c) == pytest.approx(1.0, rel=1e-8)


def test_state_validation_and_json():
    with pytest.raises(ValueError):
        GaussianState(np.eye(2) * (1 - 1j), np.zeros(2))
    with pytest.raises(ValueError):
        GaussianState(np.eye(2) * 1j, np.zeros(3))
    g = random_gaussian(np.random.default_rng(3), 2)
    h = GaussianState.from_json(g.to_json())
    assert np.array_equal(h.Z, g.Z) and np.array_equal(h.w, g.w) and h.c == g.c


def test_moments_match_grid():
    g = random_gaussian(np.random.default_rng(11), 2)
    f = sample(GridSpec.symmetric(2, 128, 7.0), g)
    a = np.array([0.6, -1.4])
    assert l2_norm(f) ** 2 == pytest.approx(g.norm2(), rel=1e-10)
    assert weighted_moment(f, (a, 0.0), 0.2) == pytest.approx(
        gaussian_moments(g, a, 0.0, 0.2), rel=1e-9)


@pytest.mark.parametrize("S", [fourier(1), harmonic_oscillator(1, 1.0, 0.7)])
def test_poly_gaussian_matches_grid_transform(S):
    base = GaussianState.isotropic(1, 1.2, center=[0.2])
    f = PolyGaussian(base, {(0,): 0.5, (1,): 1.0, (2,): -0.3 + 0.2j})
    spec = GridSpec.symmetric(1, 256, 8.0)
    out = transform_grid(S, sample(spec, f), mode="quadrature")
    exact = sample(out.spec, transform_poly_gaussian(S, f))
    z = np.vdot(exact.values, out.values) / np.vdot(exact.values, exact.values)
    assert abs(abs(z) - 1) < 1e-6
    assert np.max(np.abs(out.values - z * exact.values)) < 1e-6


def test_poly_gaussian_validation():
    base = GaussianState.isotropic(1)
    with pytest.raises(ValueError):
        PolyGaussian(base, {(1, 0): 1.0})
    with pytest.raises(ValueError):
        PolyGaussian(base, {(-1,): 1.0})
    assert PolyGaussian(base, {(0,): 1.0, (3,): 0.0}).degree == 0


@pytest.mark.parametrize("S", [multiplier(np.diag([1.0, 0.0])), harmonic_oscillator(2, 2.0, np.pi / 4),
                               partial_fourier(2, [1])])
def test_extremizer_attains_directional_equality(S):
    fr = build_frame(S, ordering="eigen")
    gam = gamma_for_sharpness(S, fr)
    g = build_extremizer_directional(S, fr, 1, 0.3, -0.4, gam[0])
    rep = heisenberg_directional(S, fr, g, constant="unit")
    assert rep.ratio == pytest.approx(1.0, abs=1e-10)
    assert rep.alpha_used[0] == pytest.approx(0.3) and rep.beta_used[0] == pytest.approx(-0.4)


def test_extremizer_with_compact_profile_on_grid():
    # equality does not depend on the profile along D^T A ker(B)
    S = partial_fourier(2, [1])
    fr = build_frame(S, ordering="axis")
    f_eval = extremizer_evaluator(S, fr, 1, 0.2, 0.1, np.pi,
                                  smooth_bump(1.5))
    spec = GridSpec.symmetric(2, 128, 4.0)
    f = sample(spec, f_eval)
    rep = heisenberg_directional(S, fr, f, constant="unit")
    assert rep.ratio == pytest.approx(1.0, abs=1e-2)


def test_gamma_for_sharpness_validation():
    S = fourier(1)
    with pytest.raises(ValueError):
        gamma_for_sharpness(S, build_frame(S), c=0.0)
    assert gamma_for_sharpness(S, build_frame(S))[0] == pytest.approx(np.pi)
