import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dias import ergodic
from dias.env import Domain, ScalarField, Source, field_on_grid
from dias.ergodic import FourierBasis, TrajectoryStats


@pytest.fixture(scope="module")
def basis():
    return FourierBasis(Domain(), 10)


def bimodal(domain):
    f = ScalarField((Source((3.0, 3.0), 1.0, 1.0), Source((7.0, 6.5), 0.8, 1.2)), domain)
    return ergodic.normalize_density(field_on_grid(f), domain)


def test_basis_orthonormal_by_fine_quadrature():
    d = Domain(10.0, 8.0, 50, 40)
    b = FourierBasis(d, 6)
    fine = Domain(10.0, 8.0, 400, 320)
    F = b.evaluate(fine.cell_centers())
    gram = F.T @ F * fine.cell_area
    np.testing.assert_allclose(gram, np.eye(len(b)), atol=1e-9)


def test_weights(basis):
    k = basis.modes
    np.testing.assert_allclose(basis.weights, (1.0 + k[:, 0] ** 2 + k[:, 1] ** 2) ** -1.5, rtol=1e-14)
    i = int(np.flatnonzero((k[:, 0] == 1) & (k[:, 1] == 0))[0])
    assert basis.weights[i] == pytest.approx(2 ** -1.5)


def test_eid_direct_substitution():
    e = ergodic.compute_eid(np.array([[0.3]]), np.array([[0.04]]), 0.0, 1.0)
    assert e.I_grid[0, 0] == pytest.approx(0.5)


@pytest.mark.parametrize("gamma", [0.0, 0.3, 5.0])
def test_eid_degenerate_cases(gamma):
    rng = np.random.default_rng(0)
    mu = rng.uniform(0, 0.2, (5, 5))
    var = rng.uniform(0, 0.05, (5, 5))
    np.testing.assert_array_equal(ergodic.compute_eid(mu, var, gamma, 0.0).I_grid, mu)
    np.testing.assert_allclose(ergodic.compute_eid(mu, np.zeros_like(mu), gamma, 2.0).I_grid, mu, atol=1e-15)


def test_gamma_updates():
    assert ergodic.update_gamma(0.0, 0.04) == 0.04
    g = 0.0
    for _ in range(25):
        g2 = ergodic.update_gamma(g, 0.01)
        assert g2 >= g
        g = g2
    assert g == pytest.approx(0.25)


def test_uniform_density_coefficients(basis):
    d = basis.domain
    coeffs = ergodic.fourier_coeffs_of_field(np.full((50, 50), 1 / d.area), basis)
    assert coeffs[0] == pytest.approx(1 / math.sqrt(d.area))
    np.testing.assert_allclose(coeffs[1:], 0.0, atol=1e-12)


def test_coefficients_match_fine_grid_oracle():
    rng = np.random.default_rng(11)
    srcs = tuple(Source(tuple(rng.uniform(2, 8, 2)), rng.uniform(0.5, 1.0), rng.uniform(1.0, 2.0)) for _ in range(3))
    coarse, fine = Domain(), Domain(10.0, 10.0, 200, 200)
    b_coarse, b_fine = FourierBasis(coarse, 10), FourierBasis(fine, 10)
    c1 = ergodic.fourier_coeffs_of_field(ergodic.normalize_density(field_on_grid(ScalarField(srcs, coarse)), coarse), b_coarse)
    c2 = ergodic.fourier_coeffs_of_field(ergodic.normalize_density(field_on_grid(ScalarField(srcs, fine)), fine), b_fine)
    np.testing.assert_allclose(c1, c2, atol=1e-3)


def test_coefficients_linear(basis):
    rng = np.random.default_rng(1)
    I1, I2 = rng.random((50, 50)), rng.random((50, 50))
    lhs = ergodic.fourier_coeffs_of_field(2.5 * I1 - 0.7 * I2, basis)
    rhs = 2.5 * ergodic.fourier_coeffs_of_field(I1, basis) - 0.7 * ergodic.fourier_coeffs_of_field(I2, basis)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_normalize_density(basis):
    d = basis.domain
    I = ergodic.normalize_density(np.random.default_rng(0).normal(0, 1, (50, 50)), d)
    assert (I >= 0).all() and I.sum() * d.cell_area == pytest.approx(1.0)
    flat = ergodic.normalize_density(-np.ones((50, 50)), d)
    assert flat.sum() * d.cell_area == pytest.approx(1.0)


def test_stationary_trajectory_stats(basis):
    s = TrajectoryStats.empty(basis)
    x = (2.3, 7.1)
    for _ in range(10):
        s = ergodic.update_trajectory_stats(s, x, 1.0, basis)
    np.testing.assert_allclose(s.c_k, basis.evaluate(x)[0], atol=1e-14)
    assert s.t_elapsed == 10.0


def test_two_position_average(basis):
    s = TrajectoryStats.empty(basis)
    s = ergodic.update_trajectory_stats(s, (1.0, 2.0), 0.5, basis)
    s = ergodic.update_trajectory_stats(s, (6.0, 3.0), 0.5, basis)
    np.testing.assert_allclose(s.c_k, (basis.evaluate((1.0, 2.0))[0] + basis.evaluate((6.0, 3.0))[0]) / 2)


def test_raster_sweep_approaches_uniform(basis):
    d = basis.domain
    fine = Domain(10.0, 10.0, 100, 100)
    pts = fine.cell_centers().reshape(100, 100, 2)
    pts[1::2] = pts[1::2, ::-1]  # boustrophedon
    s = TrajectoryStats.empty(basis)
    for p in pts.reshape(-1, 2):
        s = ergodic.update_trajectory_stats(s, p, 1.0, basis)
    uniform = ergodic.fourier_coeffs_of_field(np.full((50, 50), 1 / d.area), basis)
    assert np.max(np.abs(s.c_k - uniform)) <= 0.05 * uniform[0]


def test_metric_examples(basis):
    rng = np.random.default_rng(3)
    I = rng.random(len(basis))
    assert ergodic.ergodic_metric(I, I, basis.weights) == 0.0
    c = I.copy()
    i = int(np.flatnonzero((basis.modes[:, 0] == 1) & (basis.modes[:, 1] == 0))[0])
    c[i] += 0.3
    assert ergodic.ergodic_metric(I, c, basis.weights) == pytest.approx(2 ** -1.5 * 0.09)


def test_consensus_pair():
    out = ergodic.consensus_round(np.array([[0.2], [0.6]]), np.array([[0, 1], [1, 0]], bool), 1)
    np.testing.assert_allclose(out, [[0.4], [0.4]])
    np.testing.assert_allclose(ergodic.metropolis_weights(np.array([[0, 1], [1, 0]], bool)), [[0.5, 0.5], [0.5, 0.5]])


def test_consensus_path_graph_matrix_power_oracle():
    A = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], bool)
    v = np.array([[1.0], [5.0], [-2.0]])
    # Metropolis weights worked by hand: deg = (1, 2, 1)
    P = np.array([[2 / 3, 1 / 3, 0], [1 / 3, 1 / 3, 1 / 3], [0, 1 / 3, 2 / 3]])
    np.testing.assert_allclose(ergodic.metropolis_weights(A), P)
    out = ergodic.consensus_round(v, A, 64)
    np.testing.assert_allclose(out, np.linalg.matrix_power(P, 64) @ v, atol=1e-12)
    assert np.max(np.abs(out - v.mean())) < 1e-6


def test_control_zero_when_ergodic(basis):
    I = np.random.default_rng(0).random(len(basis))
    np.testing.assert_array_equal(ergodic.ergodic_control(I, I, (3.3, 4.4), 0.5, basis), [0.0, 0.0])


def test_control_speed(basis):
    rng = np.random.default_rng(4)
    u = ergodic.ergodic_control(rng.random(len(basis)), rng.random(len(basis)), (4.1, 5.3), 0.5, basis)
    assert np.linalg.norm(u) == pytest.approx(0.5)


def _closed_loop_metric(basis, I_k, x0, policy, steps=200):
    s = TrajectoryStats.empty(basis)
    x = np.asarray(x0, float)
    for _ in range(steps):
        s = ergodic.update_trajectory_stats(s, x, 1.0, basis)
        x = basis.domain.clip(x + policy(x, s))
    return ergodic.ergodic_metric(I_k, s.c_k, basis.weights)


def test_closed_loop_beats_stationary(basis):
    I_k = ergodic.fourier_coeffs_of_field(bimodal(basis.domain), basis)
    x0 = (1.0, 8.0)
    ctrl = _closed_loop_metric(basis, I_k, x0, lambda x, s: ergodic.ergodic_control(I_k, s.c_k, x, 0.5, basis))
    still = _closed_loop_metric(basis, I_k, x0, lambda x, s: np.zeros(2))
    assert ctrl < still


@pytest.mark.invariant
@settings(max_examples=100, deadline=None)
@given(n=st.integers(2, 10), seed=st.integers(0, 10_000), t_c=st.integers(1, 8))
def test_consensus_preserves_mean(n, seed, t_c):
    rng = np.random.default_rng(seed)
    # random connected graph: spanning tree plus extra edges
    A = np.zeros((n, n), bool)
    for i in range(1, n):
        j = rng.integers(0, i)
        A[i, j] = A[j, i] = True
    extra = rng.random((n, n)) < 0.3
    A |= extra | extra.T
    np.fill_diagonal(A, False)
    P = ergodic.metropolis_weights(A)
    assert (P >= 0).all() and (np.diag(P) > 0).all()
    np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-15)
    np.testing.assert_allclose(P.sum(axis=0), 1.0, atol=1e-15)
    v = rng.normal(size=(n, 4))
    mean = v.mean(axis=0)
    for _ in range(t_c):
        v = ergodic.consensus_round(v, A, 1)
        np.testing.assert_allclose(v.mean(axis=0), mean, atol=1e-12)


@pytest.mark.invariant
@settings(max_examples=100, deadline=None)
@given(k1=st.integers(0, 9), k2=st.integers(0, 9))
def test_weight_formula_each_mode(k1, k2):
    b = FourierBasis(Domain(), 10)
    i = k1 * 10 + k2
    assert tuple(b.modes[i]) == (k1, k2)
    assert b.weights[i] == pytest.approx((1.0 + k1**2 + k2**2) ** -1.5, rel=1e-14)


@pytest.mark.invariant
@settings(max_examples=100, deadline=None)
@given(vars_=st.lists(st.floats(0, 1), min_size=1, max_size=30))
def test_gamma_non_decreasing(vars_):
    g = 0.0
    for v in vars_:
        g2 = ergodic.update_gamma(g, v)
        assert g2 >= g
        g = g2


@pytest.mark.invariant
@settings(max_examples=100, deadline=None)
@given(cx=st.floats(2.5, 7.5), cy=st.floats(2.5, 7.5), s=st.floats(1.5, 3.0))
def test_fourier_reconstruction(cx, cy, s):
    d = Domain()
    b = FourierBasis(d, 10)
    I = ergodic.normalize_density(field_on_grid(ScalarField((Source((cx, cy), 1.0, s),), d)), d)
    rec = b.reconstruct(ergodic.fourier_coeffs_of_field(I, b))
    assert np.linalg.norm(rec - I) / np.linalg.norm(I) <= 0.10


@pytest.mark.invariant
@settings(max_examples=100, deadline=None)
@given(path=st.lists(st.tuples(st.floats(0, 10), st.floats(0, 10)), min_size=1, max_size=20))
def test_zero_mode_constant(path):
    b = FourierBasis(Domain(), 10)
    s = TrajectoryStats.empty(b)
    for p in path:
        s = ergodic.update_trajectory_stats(s, p, 1.0, b)
        assert s.c_k[0] == pytest.approx(1 / math.sqrt(Domain().area), rel=1e-12)
