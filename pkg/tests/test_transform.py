import numpy as np
import pytest

from metaplectic_up import (GaussianState, GridSpec, apply, chirp, fourier, free_particle,
                            harmonic_oscillator, make_plan, multiplier, partial_fourier,
                            phase_align, rescale, sample, transform_gaussian, transform_grid)
from metaplectic_up.grid import GridFunction
from metaplectic_up.transform import AlignmentError, UnsupportedModeError, axis_layout


def oracle_residual(S, g, out):
    return phase_align(sample(out.spec, transform_gaussian(S, g)), out)[1]


ONE_D = [fourier(1), chirp([[1.3]]) @ fourier(1), multiplier([[0.7]]),
         harmonic_oscillator(1, 1.0, 0.6), free_particle(1, 0.05)]


@pytest.mark.parametrize("S", ONE_D)
def test_1d_paths_agree_with_oracle(S):
    g = GaussianState.isotropic(1, 1.5, center=[0.3], freq=[0.4])
    f = sample(GridSpec.symmetric(1, 256, 8.0), g)
    fast = transform_grid(S, f, mode="chirp_fft")
    slow = transform_grid(S, f, mode="quadrature", output_spec=fast.spec)
    assert phase_align(fast, slow)[1] < 1e-8
    assert oracle_residual(S, g, fast) < 1e-8


@pytest.mark.parametrize("S", [fourier(2), partial_fourier(2, [2]),
                               multiplier(np.diag([1.0, 0.0])),
                               harmonic_oscillator(2, 2.0, np.pi / 4)])
def test_2d_axis_aligned(S):
    g = GaussianState(np.array([[0.2 + 1.0j, 0.1], [0.1, -0.3 + 0.8j]]), np.array([0.2, -0.1]))
    f = sample(GridSpec.symmetric(2, 128, 6.0), g)
    fast, info = transform_grid(S, f, return_info=True)
    assert info["mode"] == "chirp_fft" and info["clipped_mass"] < 1e-6
    assert oracle_residual(S, g, fast) < 1e-6
    slow = transform_grid(S, f, mode="quadrature", output_spec=fast.spec)
    assert phase_align(fast, slow)[1] < 1e-5


def test_non_aligned_operator_uses_quadrature():
    S = multiplier([[1.0, 1.0], [1.0, 1.0]]) @ chirp([[0.3, 0.0], [0.0, -0.2]])
    assert axis_layout(S) is None
    g = GaussianState.isotropic(2, 2.0, center=[0.2, -0.1])
    f = sample(GridSpec.symmetric(2, 64, 5.0), g)
    with pytest.raises(UnsupportedModeError):
        make_plan(S, f.spec, "chirp_fft")
    out, info = transform_grid(S, f, return_info=True)
    assert info["mode"] == "quadrature"
    assert oracle_residual(S, g, out) < 1e-4


def test_b_zero_branch_is_a_rescaled_chirp():
    E = np.array([[1.5, 0.3], [0.0, 0.8]])
    S = rescale(E) @ chirp([[0.4, 0.1], [0.1, -0.2]])
    g = GaussianState.isotropic(2, 2.0)
    f = sample(GridSpec.symmetric(2, 64, 5.0), g)
    out = transform_grid(S, f)
    assert oracle_residual(S, g, out) < 1e-6
    # diagonal E keeps the axes, so both paths apply
    S = rescale(np.diag([1.5, 0.8])) @ chirp([[0.4, 0.1], [0.1, -0.2]])
    for mode in ("chirp_fft", "quadrature"):
        out = transform_grid(S, f, mode=mode)
        assert oracle_residual(S, g, out) < 1e-6


def test_unitarity_on_grid():
    g = GaussianState.isotropic(1, 1.0, center=[0.5])
    f = sample(GridSpec.symmetric(1, 256, 8.0), g)
    for S in ONE_D:
        _, info = transform_grid(S, f, return_info=True)
        assert info["clipped_mass"] < 1e-5


def test_clipped_mass_detects_small_output_grid():
    g = GaussianState.isotropic(1, 40.0)
    f = sample(GridSpec.symmetric(1, 256, 4.0), g)
    small = GridSpec.symmetric(1, 32, 1.0)
    _, info = transform_grid(fourier(1), f, output_spec=small, return_info=True)
    assert info["clipped_mass"] > 0.1


def test_plan_validation():
    spec = GridSpec.symmetric(1, 16, 2.0)
    with pytest.raises(ValueError):
        make_plan(fourier(1), spec, "bogus")
    with pytest.raises(ValueError):
        make_plan(fourier(2), spec)
    with pytest.raises(UnsupportedModeError):
        make_plan(fourier(1), spec, "chirp_fft", output_spec=GridSpec.symmetric(1, 16, 3.0))
    plan = make_plan(fourier(1), spec)
    f = sample(spec, GaussianState.isotropic(1))
    assert apply(plan, f).spec == plan.output_spec


def test_phase_align_errors():
    spec = GridSpec.symmetric(1, 16, 2.0)
    x = spec.axes()[0]
    zero = GridFunction(spec, np.zeros(16))
    one = GridFunction(spec, np.sin(2 * np.pi * x / 4.0))
    two = GridFunction(spec, np.cos(2 * np.pi * x / 4.0))
    with pytest.raises(AlignmentError):
        phase_align(zero, one)
    with pytest.raises(AlignmentError):
        phase_align(one, two)
    with pytest.raises(ValueError):
        phase_align(one, GridFunction(GridSpec.symmetric(1, 8, 2.0), np.ones(8)))
    theta, res = phase_align(one, GridFunction(spec, 1j * one.values))
    assert theta == pytest.approx(-np.pi / 2) and res < 1e-14
