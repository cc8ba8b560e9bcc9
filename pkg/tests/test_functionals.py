import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from gkquad import (
    Box,
    Constant,
    DiscreteFunctional,
    IndicatorBox,
    InvalidInputError,
    KernelSpec,
    PointSet,
    RadialSingular,
    SphereGaussian,
    UnitSphere2,
    apply,
    continuity_constant,
    hnorm_squared,
    monte_carlo_functional,
    point_evaluation,
    representer_values,
)
from gkquad.functionals import difference, merge_signed
from gkquad.oracle import hnorm_sq_naive

from _instances import MATERN1, UNIT_SQUARE


def test_constant_density_weights():
    L = monte_carlo_functional(Constant(1.0), UNIT_SQUARE, 250, seed=1)
    assert_array_equal(L.weights, np.full(250, 1 / 250))
    assert math.fsum(L.weights) == pytest.approx(1.0, rel=1e-15)
    assert continuity_constant(L) == pytest.approx(1.0, rel=1e-14)


def test_constant_density_on_scaled_box():
    L = monte_carlo_functional(Constant(1.0), Box((0, 0), (2, 3)), 100, seed=0)
    assert math.fsum(L.weights) == pytest.approx(6.0, rel=1e-14)


def test_indicator_weights_take_two_values():
    M = 400
    L = monte_carlo_functional(IndicatorBox((0.3, 0.6), (0.5, 0.8)), UNIT_SQUARE, M, seed=2)
    assert set(np.unique(L.weights)) <= {0.0, 1 / M}
    inside = np.all((L.nodes.coords >= [0.3, 0.6]) & (L.nodes.coords <= [0.5, 0.8]), axis=1)
    assert_array_equal(L.weights > 0, inside)


def test_monte_carlo_is_reproducible():
    dens = IndicatorBox((0.3, 0.6), (0.5, 0.8))
    a = monte_carlo_functional(dens, UNIT_SQUARE, 100, seed=42)
    b = monte_carlo_functional(dens, UNIT_SQUARE, 100, seed=42)
    c = monte_carlo_functional(dens, UNIT_SQUARE, 100, seed=43)
    assert_array_equal(a.nodes.coords, b.nodes.coords)
    assert_array_equal(a.weights, b.weights)
    assert not np.array_equal(a.nodes.coords, c.nodes.coords)


def test_monte_carlo_validation():
    with pytest.raises(InvalidInputError):
        monte_carlo_functional(Constant(), UNIT_SQUARE, 0, seed=0)
    with pytest.raises(InvalidInputError):
        monte_carlo_functional(IndicatorBox((0, 0, 0), (1, 1, 1)), UNIT_SQUARE, 10, seed=0)


def test_singular_density_weights():
    dens = RadialSingular((0.5, 0.5), 2.0)
    L = monte_carlo_functional(dens, UNIT_SQUARE, 300, seed=5)
    r = np.sqrt(np.sum((L.nodes.coords - 0.5) ** 2, axis=1))
    assert_allclose(L.weights, r ** -2.0 / 300, rtol=1e-14)
    assert np.all(r > 1e-12)


def test_sphere_sampler_uniformity():
    L = monte_carlo_functional(Constant(), UnitSphere2(), 10_000, seed=9)
    norms = np.linalg.norm(L.nodes.coords, axis=1)
    assert np.max(np.abs(norms - 1)) <= 1e-12
    assert np.linalg.norm(L.nodes.coords.mean(axis=0)) < 0.05
    assert math.fsum(L.weights) == pytest.approx(4 * math.pi, rel=1e-13)


def test_sphere_gaussian_density():
    dens = SphereGaussian((0.0, -1.0, 0.0), (-5.0, -5.0, -3.0))
    assert dens(np.array([[0.0, -1.0, 0.0]]))[0] == 1.0
    # (x - c) = (1, 1, 0): exp(-5 - 5)
    assert dens(np.array([[1.0, 0.0, 0.0]]))[0] == pytest.approx(math.exp(-10.0), rel=1e-15)


def test_density_validation():
    with pytest.raises(InvalidInputError):
        IndicatorBox((0.5, 0.0), (0.4, 1.0))
    with pytest.raises(InvalidInputError):
        RadialSingular((0.0, 0.0), -1.0)
    with pytest.raises(InvalidInputError):
        Box((0.0,), (0.0,))


def test_domain_measures():
    assert Box((0, 0), (1, 1)).measure == 1.0
    assert Box((-1, 0, 2), (1, 0.5, 5)).measure == pytest.approx(3.0, abs=1e-12)
    assert UnitSphere2().measure == pytest.approx(4 * math.pi, abs=1e-12)


def test_functional_validation():
    with pytest.raises(InvalidInputError):
        DiscreteFunctional(PointSet(np.zeros((2, 2)) + [[0, 0], [1, 1]]), [1.0])
    with pytest.raises(InvalidInputError):
        DiscreteFunctional(PointSet([[0.0, 0.0]]), [np.nan])
    with pytest.raises(InvalidInputError):
        DiscreteFunctional(PointSet(np.zeros((0, 2))), [])


def test_apply_examples():
    L = monte_carlo_functional(Constant(), UNIT_SQUARE, 64, seed=0)
    assert apply(L, np.ones(64)) == pytest.approx(1.0, rel=1e-15)
    rho = np.random.default_rng(1).normal(size=5)
    L2 = DiscreteFunctional(PointSet(np.eye(5)), rho)
    assert apply(L2, np.eye(5)[3]) == rho[3]
    with pytest.raises(InvalidInputError):
        apply(L2, np.ones(4))


def test_apply_matches_compensated_sum():
    rng = np.random.default_rng(11)
    L = DiscreteFunctional(PointSet(rng.uniform(size=(50, 2))), rng.normal(size=50))
    f = rng.normal(size=50)
    ref = math.fsum(float(a) * float(b) for a, b in zip(L.weights, f))
    assert apply(L, f) == pytest.approx(ref, rel=1e-14)


def test_representer_of_point_evaluation():
    z = np.array([0.3, 0.7])
    X = np.random.default_rng(2).uniform(size=(10, 2))
    v = representer_values(point_evaluation(z), MATERN1, X)
    assert_allclose(v, [MATERN1.phi(np.linalg.norm(x - z)) for x in X], rtol=1e-15)


def test_representer_zero_weights():
    L = DiscreteFunctional(PointSet([[0.0, 0.0], [1.0, 0.0]]), [0.0, 0.0])
    assert_array_equal(representer_values(L, MATERN1, np.eye(2)), [0.0, 0.0])


def test_representer_double_loop():
    rng = np.random.default_rng(3)
    Z, rho, X = rng.uniform(size=(3, 2)), rng.normal(size=3), rng.uniform(size=(2, 2))
    L = DiscreteFunctional(PointSet(Z), rho)
    ref = [sum(rho[i] * MATERN1.phi(math.dist(X[j], Z[i])) for i in range(3)) for j in range(2)]
    assert_allclose(representer_values(L, MATERN1, X), ref, rtol=1e-15)


def test_hnorm_examples():
    assert hnorm_squared(point_evaluation([0.1, 0.2]), MATERN1) == 3.0
    L0 = DiscreteFunctional(PointSet([[0.0, 0.0], [1.0, 0.0]]), [0.0, 0.0])
    assert hnorm_squared(L0, MATERN1) == 0.0


def test_hnorm_matches_naive_double_loop():
    rng = np.random.default_rng(4)
    L = DiscreteFunctional(PointSet(rng.uniform(size=(40, 2))), rng.normal(size=40))
    total = math.fsum(
        L.weights[i] * L.weights[j] * MATERN1.phi(math.dist(L.nodes.coords[i], L.nodes.coords[j]))
        for i in range(40) for j in range(40)
    )
    assert hnorm_squared(L, MATERN1) == pytest.approx(total, rel=1e-12)
    assert hnorm_sq_naive(MATERN1, L) == pytest.approx(total, rel=1e-12)


def test_hnorm_blocking_across_blocks():
    L = monte_carlo_functional(IndicatorBox((0.2, 0.2), (0.6, 0.7)), UNIT_SQUARE, 2500, seed=6)
    assert hnorm_squared(L, MATERN1) == pytest.approx(hnorm_sq_naive(MATERN1, L), rel=1e-12)


def test_hnorm_cap():
    L = monte_carlo_functional(Constant(), UNIT_SQUARE, 50, seed=0)
    with pytest.raises(InvalidInputError, match="cap"):
        hnorm_squared(L, MATERN1, max_nodes=49)


def test_continuity_constant_signed():
    L = DiscreteFunctional(PointSet([[0.0, 0.0], [1.0, 0.0]]), [1.0, -2.0])
    assert continuity_constant(L) == 3.0


def test_merge_signed_combines_coincident_points():
    X, w = merge_signed([(np.array([[0.0, 0.0], [1.0, 0.0]]), [1.0, 2.0]),
                         (np.array([[1.0, 0.0], [0.0, 5.0]]), [-2.0, 4.0])], 2)
    assert_array_equal(X, [[0.0, 0.0], [1.0, 0.0], [0.0, 5.0]])
    assert_array_equal(w, [1.0, 0.0, 4.0])


def test_difference_of_equal_functionals_is_zero():
    L = monte_carlo_functional(Constant(), UNIT_SQUARE, 30, seed=3)
    D = difference(L, L)
    assert len(D) == 30
    assert_array_equal(D.weights, np.zeros(30))
    assert hnorm_squared(D, MATERN1) == 0.0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_hnorm_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    Z, rho = rng.uniform(size=(25, 2)), rng.normal(size=25)
    perm = rng.permutation(25)
    a = hnorm_squared(DiscreteFunctional(PointSet(Z), rho), MATERN1)
    b = hnorm_squared(DiscreteFunctional(PointSet(Z[perm]), rho[perm]), MATERN1)
    assert a == pytest.approx(b, rel=1e-13)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_representer_linearity(seed, a, b):
    rng = np.random.default_rng(seed)
    nodes = PointSet(rng.uniform(size=(15, 2)))
    r1, r2 = rng.normal(size=15), rng.normal(size=15)
    X = rng.uniform(size=(8, 2))
    lhs = representer_values(DiscreteFunctional(nodes, a * r1 + b * r2), MATERN1, X)
    rhs = a * representer_values(DiscreteFunctional(nodes, r1), MATERN1, X) + \
        b * representer_values(DiscreteFunctional(nodes, r2), MATERN1, X)
    scale = np.max(np.abs(a * representer_values(DiscreteFunctional(nodes, np.abs(r1)), MATERN1, X))) + \
        np.max(np.abs(b * representer_values(DiscreteFunctional(nodes, np.abs(r2)), MATERN1, X)))
    assert np.max(np.abs(lhs - rhs)) <= 1e-13 * max(scale, 1e-300)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 20))
def test_hnorm_nonnegative_and_zero_iff_zero_weights(seed, m):
    rng = np.random.default_rng(seed)
    nodes = PointSet(rng.uniform(size=(m, 2)))
    rho = rng.normal(size=m)
    assert hnorm_squared(DiscreteFunctional(nodes, rho), MATERN1) > 0
    assert hnorm_squared(DiscreteFunctional(nodes, np.zeros(m)), MATERN1) == 0


def test_gaussian_kernel_functional():
    k = KernelSpec("Gaussian", 3.0, 2)
    L = monte_carlo_functional(Constant(), UNIT_SQUARE, 20, seed=0)
    assert hnorm_squared(L, k) == pytest.approx(hnorm_sq_naive(k, L), rel=1e-13)
