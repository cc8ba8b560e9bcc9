import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from gkquad import InvalidInputError, PointSet, hnorm_squared, representer_values
from gkquad.oracle import (
    dense_projection,
    direct_interpolant,
    exhaustive_fp_step,
    fill_and_separation,
    one_step_errors,
    projection_error_sq,
    rate_fit,
)

from _instances import MATERN1, grid_points, oracle_instance, separated_points


def test_interpolant_reproduces_data():
    rng = np.random.default_rng(0)
    X = separated_points(rng, 20, sep=0.1)
    y = rng.normal(size=20)
    assert_allclose(direct_interpolant(MATERN1, X, y, X), y, rtol=1e-9, atol=1e-9 * np.max(np.abs(y)))


def test_single_point_coefficient():
    P = dense_projection(MATERN1, [[0.2, 0.3]], [1.5], [[0.2, 0.3], [0.9, 0.9]])
    assert_allclose(P.alpha, [0.5], rtol=1e-15)
    assert P.values[0] == pytest.approx(1.5, rel=1e-15)


def test_dense_projection_length_check():
    with pytest.raises(InvalidInputError):
        dense_projection(MATERN1, np.eye(2), [1.0], np.eye(2))


def test_projection_error_empty_set_is_norm():
    X, L = oracle_instance(1, n_candidates=10, M=30)
    assert projection_error_sq(MATERN1, np.zeros((0, 2)), L) == pytest.approx(hnorm_squared(L, MATERN1), rel=1e-12)


def test_exhaustive_first_step_is_normalised_argmax():
    X, L = oracle_instance(2, n_candidates=150, M=60)
    v = representer_values(L, MATERN1, X)
    assert exhaustive_fp_step(MATERN1, np.zeros((0, 2)), X, L) == int(np.argmax(v ** 2 / 3.0))


def test_exhaustive_single_candidate():
    X, L = oracle_instance(2, n_candidates=20, M=30)
    assert exhaustive_fp_step(MATERN1, X.coords[:3], X.coords[7:8], L) == 0


def test_one_step_errors_mark_current_points():
    X, L = oracle_instance(4, n_candidates=30, M=40)
    errs = one_step_errors(MATERN1, X.coords[:2], X, L)
    assert np.all(np.isinf(errs[:2]))
    ref = projection_error_sq(MATERN1, X.coords[[0, 1, 9]], L)
    assert errs[9] == pytest.approx(ref, rel=1e-9)


def test_fill_distance_of_probe_itself():
    P = grid_points(9)
    assert fill_and_separation(P, P).h == 0.0


def test_fill_and_separation_two_points():
    X = np.array([[0.0], [1.0]])
    probe = np.linspace(0, 1, 1001)[:, None]
    fs = fill_and_separation(X, probe)
    assert fs.h == pytest.approx(0.5, abs=1e-12)
    assert fs.q_sep == 0.5


def test_single_point_separation_is_infinite():
    fs = fill_and_separation(PointSet([[0.5, 0.5]]), grid_points(5))
    assert math.isinf(fs.q_sep)
    assert fs.h == pytest.approx(math.sqrt(0.5), rel=1e-14)


def test_dyadic_grids_halve_fill_distance():
    probe = grid_points(257)
    hs = [fill_and_separation(grid_points(2 ** k + 1), probe).h for k in range(1, 6)]
    assert_allclose(np.array(hs[:-1]) / np.array(hs[1:]), 2.0, rtol=1e-12)


def test_fill_and_separation_empty():
    with pytest.raises(InvalidInputError):
        fill_and_separation(np.zeros((0, 2)), grid_points(3))


def test_rate_fit_examples():
    ns = np.arange(5, 200, 7)
    assert rate_fit(ns, ns ** -2.0) == pytest.approx(-2.0, abs=1e-12)
    assert rate_fit(ns, np.full(ns.shape, 3.0)) == pytest.approx(0.0, abs=1e-12)
    assert rate_fit(ns, 4.2 * ns ** -0.5) == pytest.approx(-0.5, abs=1e-12)


def test_rate_fit_errors():
    with pytest.raises(InvalidInputError):
        rate_fit([1, 2, 3], [1.0, 0.0, 1.0])
    with pytest.raises(InvalidInputError):
        rate_fit([1, 2], [1.0, 0.5])
    with pytest.raises(InvalidInputError):
        rate_fit([1, 3, 2], [1.0, 0.5, 0.2])
    with pytest.raises(InvalidInputError):
        rate_fit([1, 2, 3], [1.0, 0.5])
