import csv

import numpy as np
import pytest
from hypothesis import assume, given, settings

from conftest import random_symplectic, seeds
from metaplectic_up import (GaussianState, GridSpec, NoUncertaintyError, build_extremizer_directional,
                            build_frame, chirp, constants, fourier, free_particle, harmonic_oscillator,
                            heisenberg_cartesian, heisenberg_directional, heisenberg_full, multiplier,
                            partial_fourier, rescale, sample)
from metaplectic_up.gaussian import random_gaussian, transform_gaussian
from metaplectic_up.grid import GridFunction
from metaplectic_up.uncertainty import DegenerateInputError, bound_sweep, ratio_of, write_sweep_csv

P_DEG = np.diag([1.0, 0.0])
Q_MIX = np.array([[0.3, 0.7], [0.7, -0.2]])
E_OBL = np.array([[1.2, 0.4], [-0.3, 0.9]])


def oblique_counterexample():
    return rescale(E_OBL) @ multiplier(P_DEG) @ chirp(Q_MIX) @ rescale(np.linalg.inv(E_OBL).T)


def sharp_extremizer(S, frame, alpha=0.2, beta=0.1):
    k = constants(S, frame)
    gam = np.pi / (frame.singular_values[0] * np.sqrt(k.sigma_B) * k.mu_S)
    return build_extremizer_directional(S, frame, 1, alpha, beta, gamma=gam)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_fourier_gaussian_is_extremal(d):
    g = GaussianState.isotropic(d, np.pi, center=np.linspace(-0.5, 0.5, d))
    rep = heisenberg_full(fourier(d), None, g)
    assert rep.bound / rep.norm2 == pytest.approx(d / (4 * np.pi), rel=1e-14)
    assert rep.ratio == pytest.approx(1.0, abs=1e-12)
    rep = heisenberg_directional(fourier(d), None, g, j=d)
    assert rep.ratio == pytest.approx(1.0, abs=1e-12)


def test_fourier_on_grid():
    g = GaussianState.isotropic(1, 2.0, center=[0.4], freq=[-0.3])
    f = sample(GridSpec.symmetric(1, 256, 8.0), g)
    rep = heisenberg_full(fourier(1), None, f)
    assert rep.ratio == pytest.approx(1.0, abs=1e-6)
    assert rep.alpha_used[0] == pytest.approx(0.4, abs=1e-10)
    assert rep.clipped_mass < 1e-10


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_auto_centering_minimises_dispersion(seed):
    rng = np.random.default_rng(seed)
    S = random_symplectic(rng, 2)
    g = random_gaussian(rng, 2)
    r = build_frame(S, ordering="eigen").r
    assume(r > 0)
    auto = heisenberg_full(S, None, g, constant="unit")
    other = heisenberg_full(S, None, g, alpha=rng.normal(size=r), beta=rng.normal(size=r),
                            constant="unit")
    assert other.lhs_space >= auto.lhs_space * (1 - 1e-12)
    assert other.lhs_freq >= auto.lhs_freq * (1 - 1e-12)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_unit_bounds_hold_for_random_operators(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 4))
    S = random_symplectic(rng, d)
    g = random_gaussian(rng, d)
    fr = build_frame(S, ordering="eigen")
    for coords in ("oblique", "orthogonal"):
        assert heisenberg_full(S, fr, g, constant="unit", coords=coords).ratio >= 1 - 1e-9
        for j in range(1, fr.r + 1):
            rep = heisenberg_directional(S, fr, g, j=j, constant="unit", coords=coords)
            assert rep.ratio >= 1 - 1e-9
    for j in range(1, d + 1):
        for k in range(1, d + 1):
            assert heisenberg_cartesian(S, g, j=j, k=k).ratio >= 1 - 1e-9


@pytest.mark.parametrize("S", [multiplier(P_DEG), harmonic_oscillator(2, 2.0, np.pi / 4),
                               partial_fourier(2, [1]), free_particle(2, 0.3)])
def test_full_bound_is_trace_times_directional(S):
    fr = build_frame(S, ordering="eigen")
    g = random_gaussian(np.random.default_rng(5), 2)
    full = heisenberg_full(S, fr, g)
    single = heisenberg_directional(S, fr, g)
    assert full.bound == pytest.approx(np.sum(fr.singular_values) * single.bound, rel=1e-12)


def test_ratio_conventions():
    assert ratio_of(2.0, 1.0) == 2.0
    assert ratio_of(1.0, 0.0) == np.inf
    assert ratio_of(0.0, 0.0) == 1.0


def test_degenerate_inputs():
    S = harmonic_oscillator(1, 1.0, np.pi)             # B = 0 exactly
    g = GaussianState.isotropic(1)
    with pytest.raises(NoUncertaintyError):
        heisenberg_directional(S, None, g)
    rep = heisenberg_full(S, None, g)
    assert rep.bound == 0.0 and rep.ratio == np.inf
    zero = GridFunction(GridSpec.symmetric(1, 16, 2.0), np.zeros(16))
    with pytest.raises(DegenerateInputError):
        heisenberg_full(fourier(1), None, zero)
    with pytest.raises(ValueError):
        heisenberg_directional(fourier(1), None, g, j=2)
    with pytest.raises(ValueError):
        heisenberg_directional(fourier(1), None, g, constant="other")
    with pytest.raises(ValueError):
        heisenberg_cartesian(fourier(1), g, j=0)
    with pytest.raises(ValueError):
        heisenberg_full(fourier(1), None, g, coords="polar")


def test_cartesian_bound_on_grid_inputs():
    S = multiplier([[1.0, 0.5], [0.5, 2.0]])
    rng = np.random.default_rng(7)
    spec = GridSpec.symmetric(2, 64, 6.0)
    for _ in range(30):
        g = random_gaussian(rng, 2)
        f = sample(spec, g)
        Sf = sample(spec, transform_gaussian(S, g))
        for j in (1, 2):
            for k in (1, 2):
                rep = heisenberg_cartesian(S, f, Sf, j, k)
                assert rep.bound == pytest.approx(abs(S.B[k - 1, j - 1]) * rep.norm2 / (4 * np.pi))
                assert rep.ratio >= 1 - 5e-3


def test_cartesian_bound_uses_row_k_column_j():
    # with a non-symmetric B the transposed entry would be violated
    S = multiplier(np.eye(2)) @ rescale(np.array([[1.0, 0.0], [3.0, 1.0]]))
    assert abs(S.B[0, 1] - S.B[1, 0]) > 1
    g = random_gaussian(np.random.default_rng(1), 2)
    worst = min(heisenberg_cartesian(S, g, j=j, k=k).ratio for j in (1, 2) for k in (1, 2))
    assert worst >= 1 - 1e-12


def test_K_S_bound_is_loose_for_a_chirped_degenerate_multiplier():
    S = chirp(Q_MIX) @ multiplier(P_DEG)
    fr = build_frame(S)
    assert constants(S, fr).K_S == pytest.approx(0.90511, abs=1e-5)
    g = sharp_extremizer(S, fr)
    assert heisenberg_directional(S, fr, g).ratio == pytest.approx(1.10483, abs=1e-5)
    assert heisenberg_directional(S, fr, g, constant="unit").ratio == pytest.approx(1.0, abs=1e-12)


def test_K_S_bound_fails_for_an_oblique_frame():
    S = oblique_counterexample()
    fr = build_frame(S)
    k = constants(S, fr)
    assert k.K_S == pytest.approx(1.02767, abs=1e-5)
    assert k.mu_S == pytest.approx(1.21842, abs=1e-5)
    g = sharp_extremizer(S, fr)
    rep = heisenberg_directional(S, fr, g)
    assert rep.ratio == pytest.approx(0.97307, abs=1e-5)
    assert not rep.holds()
    unit = heisenberg_directional(S, fr, g, constant="unit")
    assert unit.ratio == pytest.approx(1.0, abs=1e-12)
    assert heisenberg_directional(S, fr, g, constant="unit", coords="orthogonal").ratio > 1


def test_coordinate_choices_agree_for_orthogonal_splittings():
    S = partial_fourier(2, [1])
    g = random_gaussian(np.random.default_rng(2), 2)
    a = heisenberg_directional(S, None, g, coords="oblique")
    b = heisenberg_directional(S, None, g, coords="orthogonal")
    assert a.product == pytest.approx(b.product, rel=1e-12)


def test_sweep_rows_and_csv(tmp_path):
    g = GaussianState.isotropic(2)
    ts = np.linspace(-1, 1, 5)
    rows = bound_sweep(lambda t: free_particle(2, t), g, ts)
    for t, row in zip(ts, rows):
        assert row.report.bound == pytest.approx(2 * abs(t) * g.norm2(), rel=1e-12, abs=1e-15)
        assert not row.flagged
    assert rows[2].report.bound == 0.0
    path = tmp_path / "sweep.csv"
    write_sweep_csv(path, rows, 2)
    with open(path) as fh:
        table = list(csv.reader(fh))
    assert table[0] == ["param", "lhs_space", "lhs_freq", "product", "bound", "ratio",
                        "alpha1", "alpha2", "beta1", "beta2", "clipped_mass"]
    assert len(table) == 6 and float(table[1][0]) == -1.0
