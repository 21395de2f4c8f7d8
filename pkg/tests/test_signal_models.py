import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kmedian_cpe.recovery import MeasurementOperator
from kmedian_cpe.signal_models import (
    CorrelationProfile, ParameterGrid, ParametricModel, build_dictionary, build_grid,
    coherence, compose_signal, correlation_profile, draw_random_scene, inverse_cumulative,
    min_separation, offbound_distance, synthesize_atom)

CHIRP = ParametricModel.chirp()
TDE_GRID = build_grid(0.0, 10e-6, 0.02e-6)


# grids

def test_grid_sizes():
    assert build_grid(0, 10e-6, 1e-9).L == 10001
    assert build_grid(0, 500, 0.05).L == 10001
    g = build_grid(0, 1, 1)
    assert g.L == 2
    np.testing.assert_array_equal(g.points, [0.0, 1.0])


def test_grid_last_point_and_bijection():
    g = build_grid(0, 10e-6, 0.005e-6)
    assert abs(g.points[-1] - 10e-6) <= g.delta / 2
    idx = np.arange(g.L)
    np.testing.assert_array_equal(g.nearest_index(g.value(idx)), idx)


@pytest.mark.parametrize("args", [(0, 1, 0), (0, 1, -0.1), (0, 0.5, 1), (1, 0, 0.1)])
def test_grid_rejects_bad_input(args):
    with pytest.raises(ValueError):
        build_grid(*args)


@given(st.floats(-100, 100), st.floats(1e-3, 10), st.integers(1, 500))
def test_grid_index_round_trip(lo, delta, steps):
    g = build_grid(lo, lo + steps * delta, delta)
    assert g.L == steps + 1
    i = np.arange(g.L)
    np.testing.assert_array_equal(g.nearest_index(g.value(i)), i)


# atoms

def test_fourier_zero_frequency():
    np.testing.assert_allclose(synthesize_atom(ParametricModel.fourier(4), 0.0),
                               np.ones(4) / 2, atol=1e-15)


def test_fourier_integer_frequencies_orthogonal():
    m = ParametricModel.fourier(500)
    a, b = synthesize_atom(m, 1.0), synthesize_atom(m, 2.0)
    assert abs(np.vdot(a, b)) < 1e-12
    assert abs(np.linalg.norm(a) - 1) < 1e-12


@pytest.mark.parametrize("window", ["hann", "edge"])
@pytest.mark.parametrize("theta", [0.0, 3.3e-6, 9e-6])
def test_chirp_norm_close_to_one(window, theta):
    atom = synthesize_atom(ParametricModel.chirp(window=window), theta)
    assert abs(np.linalg.norm(atom) - 1) <= 0.03


def test_chirp_zero_outside_support():
    atom = synthesize_atom(CHIRP, 2e-6)
    n = np.arange(500) / 50e6 - 2e-6
    assert np.all(atom[(n < 0) | (n > 1e-6)] == 0)
    assert np.count_nonzero(atom) > 0


def test_chirp_matches_closed_form_samples():
    theta = 1.234e-6
    atom = synthesize_atom(ParametricModel.chirp(window="edge"), theta)
    for n in (62, 80, 100, 111):
        u = n / 50e6 - theta
        if not 0 <= u <= 1e-6:
            continue
        expected = (np.sqrt(2 / (3 * 1e-6 * 50e6))
                    * np.exp(2j * np.pi * (1e6 + u / 1e-6 * 20e6) * u)
                    * (1 + np.cos(2 * np.pi * u / 1e-6)))
        assert abs(atom[n] - expected) < 1e-12


def test_atoms_deterministic():
    a = synthesize_atom(CHIRP, 4.56e-6)
    b = synthesize_atom(CHIRP, 4.56e-6)
    np.testing.assert_array_equal(a, b)


def test_unknown_window_rejected():
    with pytest.raises(ValueError):
        ParametricModel.chirp(window="box")


# dictionaries and coherence

def test_fourier_dictionary_unitary():
    d = build_dictionary(ParametricModel.fourier(8), build_grid(0, 7, 1))
    np.testing.assert_allclose(d.atoms.conj().T @ d.atoms, np.eye(8), atol=1e-12)


def test_single_column_dictionary():
    d = build_dictionary(CHIRP, ParameterGrid(1e-6, 1e-6, 0.02e-6))
    assert d.atoms.shape == (500, 1)


def test_tde_dictionary_size_and_regeneration():
    d1 = build_dictionary(CHIRP, TDE_GRID)
    d2 = build_dictionary(CHIRP, TDE_GRID)
    assert d1.atoms.shape == (500, 501)
    np.testing.assert_array_equal(d1.atoms, d2.atoms)
    assert not d1.atoms.flags.writeable


def test_dictionary_memory_cap():
    with pytest.raises(MemoryError):
        build_dictionary(CHIRP, TDE_GRID, max_entries=1000)


def test_coherence_examples():
    assert coherence(np.eye(5)) == 0.0
    a = np.random.default_rng(0).standard_normal((6, 3))
    a[:, 2] = a[:, 0]
    assert abs(coherence(a) - 1) < 1e-12
    d = build_dictionary(ParametricModel.fourier(500), build_grid(0, 10, 1))
    assert coherence(d) < 1e-12


def test_coherence_matches_bruteforce():
    d = build_dictionary(CHIRP, build_grid(2e-6, 3e-6, 0.05e-6))
    a = d.atoms / np.linalg.norm(d.atoms, axis=0)
    g = np.abs(a.conj().T @ a)
    np.fill_diagonal(g, 0)
    assert abs(coherence(d) - g.max()) < 1e-12


def test_coherence_errors():
    a = np.eye(4)
    a[:, 1] = 0
    with pytest.raises(ValueError):
        coherence(a)
    with pytest.raises(ValueError):
        coherence(np.ones((4, 1)))


# correlation profiles

def test_fourier_profile_integer_grid():
    m = ParametricModel.fourier(500)
    p = correlation_profile(m, build_grid(0, 20, 1))
    assert abs(p.peak - 1) < 1e-12
    off = np.delete(p.lam, p.center)
    assert np.max(off) < 1e-12


@pytest.mark.parametrize("model,grid", [
    (CHIRP, TDE_GRID),
    (ParametricModel.fourier(1000), build_grid(0, 500, 0.5)),
])
def test_profile_invariants(model, grid):
    p = correlation_profile(model, grid)
    assert p.offsets.size == 2 * grid.L - 1
    np.testing.assert_allclose(p.lam, p.lam[::-1], rtol=1e-9, atol=1e-12 * p.peak)
    assert np.all(np.diff(p.cumulative) >= 0)
    assert abs(p.cumulative[-1] - p.total) <= 1e-12 * p.total
    sym = p.at(p.offsets) + p.at(-p.offsets)
    np.testing.assert_allclose(sym, p.total, rtol=1e-6)
    assert abs(p.at_zero - p.total / 2) <= 1e-6 * p.total
    tol = 0.03 if model.kind.value == "chirp" else 1e-12
    assert abs(p.peak - 1) <= tol


def test_profile_operator_dimension_mismatch():
    with pytest.raises(ValueError):
        correlation_profile(CHIRP, TDE_GRID, op=np.ones((10, 7)))


def test_compressed_profile_preserves_inner_products():
    grid = build_grid(4e-6, 6e-6, 0.02e-6)
    base = correlation_profile(CHIRP, grid)
    M = 200
    dev_main, dev_floor = [], []
    main = base.lam > 0.1 * base.peak
    for s in range(100):
        op = MeasurementOperator.gaussian(M, 500, seed=s)
        lam = correlation_profile(CHIRP, grid, op=op).lam
        dev_main.append(np.max(np.abs(lam[main] - base.lam[main]) / base.lam[main]))
        dev_floor.append(np.max(np.abs(lam[~main] - base.lam[~main])))
    # empirical (delta, tau) of the inner-product preservation band
    delta, tau = np.median(dev_main), np.median(dev_floor)
    assert delta < 0.35
    assert tau < 5 / np.sqrt(M)


def test_inverse_cumulative_right_inverse():
    p = correlation_profile(CHIRP, TDE_GRID)
    for k in (0, 10, p.center, p.center + 3, p.offsets.size - 1):
        v = p.cumulative[k]
        theta = inverse_cumulative(p, v)
        assert theta <= p.offsets[k]
        assert abs(p.at(theta) - v) <= 1e-9 * p.total
    assert inverse_cumulative(p, p.total) == p.offsets[-1]
    with pytest.raises(ValueError):
        inverse_cumulative(p, -1.0)
    with pytest.raises(ValueError):
        inverse_cumulative(p, 2 * p.total)


def exponential_profile(a=1.0, delta=1e-3, half_width=30.0):
    k = np.arange(-int(half_width / delta), int(half_width / delta) + 1)
    offsets = k * delta
    return CorrelationProfile.from_lambda(offsets, np.exp(-a * np.abs(offsets)))


def test_inverse_cumulative_exponential_model():
    p = exponential_profile()
    # continuous cumulative: Lambda(0) = 1/a (in units of delta-scaled sums)
    assert abs(p.at_zero * p.delta - 1.0) < 1e-3
    assert abs(inverse_cumulative(p, p.at_zero)) <= p.delta
    for theta in (-2.0, -0.5, 0.7, 3.0):
        closed = np.exp(theta) if theta <= 0 else 2 - np.exp(-theta)
        assert abs(p.at(theta) * p.delta - closed) < 2e-3


# signals and scenes

def test_compose_single_on_grid_equals_column():
    d = build_dictionary(CHIRP, TDE_GRID)
    x = compose_signal(d, [d.grid.value(123)], [1.0])
    np.testing.assert_allclose(x, d.atoms[:, 123], atol=1e-15)


def test_compose_orthogonal_fourier_norm():
    d = build_dictionary(ParametricModel.fourier(500), build_grid(0, 10, 1))
    x = compose_signal(d, [2.0, 5.0], [1.0, 1j])
    assert abs(np.linalg.norm(x) - np.sqrt(2)) < 1e-9


def test_compose_triangle_inequality_and_errors():
    d = build_dictionary(CHIRP, TDE_GRID)
    params, coefs = draw_random_scene(d.grid, 4, 0.2e-6, 1e-6, rng_seed=3)
    x = compose_signal(d, params, coefs)
    assert np.linalg.norm(x) <= np.sum(np.abs(coefs)) * 1.03
    with pytest.raises(ValueError):
        compose_signal(d, [], [])


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(1e-6, 9e-6), min_size=1, max_size=4),
       st.integers(0, 2 ** 31))
def test_compose_linear(params, seed):
    d = build_dictionary(CHIRP, build_grid(0, 10e-6, 0.1e-6))
    rng = np.random.default_rng(seed)
    c1 = rng.standard_normal(len(params)) + 1j * rng.standard_normal(len(params))
    c2 = rng.standard_normal(len(params)) + 1j * rng.standard_normal(len(params))
    lhs = compose_signal(d, params, c1 + c2)
    rhs = compose_signal(d, params, c1) + compose_signal(d, params, c2)
    assert np.linalg.norm(lhs - rhs) <= 1e-12 * max(np.linalg.norm(lhs), 1.0)


def test_scene_single_component_in_bounds():
    p, c = draw_random_scene(TDE_GRID, 1, 0.2e-6, 1e-6, rng_seed=1)
    assert 1e-6 <= p[0] <= 9e-6
    assert np.all(np.abs(c) == 1)


def test_scene_separation_tde():
    for s in range(50):
        p, _ = draw_random_scene(TDE_GRID, 4, 0.2e-6, rng_seed=s, on_grid=True)
        assert min_separation(p) >= 0.2e-6 - 1e-15


def test_scene_unit_range_and_determinism():
    a = draw_random_scene(TDE_GRID, 4, 0.2e-6, r=1.0, magnitude_mode="range", rng_seed=9)
    b = draw_random_scene(TDE_GRID, 4, 0.2e-6, r=1.0, magnitude_mode="range", rng_seed=9)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])
    np.testing.assert_allclose(np.abs(a[1]), 1.0)


def test_scene_real_mode():
    _, c = draw_random_scene(TDE_GRID, 3, 0.2e-6, complex_phase=False, rng_seed=2)
    np.testing.assert_array_equal(c, np.ones(3))


def test_scene_infeasible():
    with pytest.raises(ValueError):
        draw_random_scene(TDE_GRID, 4, 3.5e-6, 0.0, rng_seed=0)
    with pytest.raises(ValueError):
        draw_random_scene(TDE_GRID, 1, 0.0, 5e-6, rng_seed=0)


@settings(max_examples=60, deadline=None)
@given(K=st.integers(1, 6), zeta=st.floats(0.0, 1.5), eps=st.floats(0.0, 1.0),
       r=st.floats(1.0, 50.0), seed=st.integers(0, 2 ** 31), on_grid=st.booleans())
def test_scene_constraints(K, zeta, eps, r, seed, on_grid):
    grid = build_grid(0, 10, 0.01)
    if (K - 1) * zeta + 2 * eps >= 10 - 0.1:
        return
    p, c = draw_random_scene(grid, K, zeta, eps, r=r, magnitude_mode="range",
                             rng_seed=seed, on_grid=on_grid)
    assert p.size == K
    assert np.all(np.diff(p) > 0)
    assert min_separation(p) >= zeta - 1e-9
    assert offbound_distance(grid, p) >= eps - 1e-9
    mags = np.abs(c)
    assert np.all(mags >= 1 - 1e-12) and np.all(mags <= r * (1 + 1e-12))
    assert mags.max() / mags.min() <= r * (1 + 1e-12)
