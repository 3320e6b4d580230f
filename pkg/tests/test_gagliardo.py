import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from fracpq.core_grid import build_grid
from fracpq.errors import DomainError, GeometryError, GridMismatchError, PreconditionError
from fracpq.gagliardo import (
    build_kernel, exterior_coefficient_2d, exterior_coefficients_1d, form_A, harnack_ratio, odd_power,
    operator_apply, seminorm, tail_T,
)


# --- exterior coefficients ------------------------------------------------------------------

@pytest.mark.parametrize("x, es", [(0.0, 0.8), (0.7, 0.5), (-0.95, 1.3)])
def test_exterior_1d_matches_quadrature(x, es):
    got = exterior_coefficients_1d(np.array([x]), -1.0, 1.0, es)[0]
    assert oracles.relerr(got, oracles.exterior_1d(x, -1.0, 1.0, es)) < 1e-13


@pytest.mark.parametrize("point, es", [((0.5, 0.5), 0.7), ((0.1, 0.8), 0.4), ((0.93, 0.05), 1.1)])
def test_exterior_2d_matches_boundary_integral(point, es):
    got = exterior_coefficient_2d(point, (0.0, 0.0), (1.0, 1.0), es)
    assert oracles.relerr(got, oracles.exterior_2d(point, (0.0, 0.0), (1.0, 1.0), es)) < 1e-11


def test_exterior_2d_symmetries():
    lo, hi = (0.0, 0.0), (1.0, 1.0)
    base = exterior_coefficient_2d((0.2, 0.3), lo, hi, 0.6)
    for image in [(0.8, 0.3), (0.2, 0.7), (0.3, 0.2), (0.7, 0.8)]:
        assert math.isclose(exterior_coefficient_2d(image, lo, hi, 0.6), base, rel_tol=1e-12)


def test_exterior_2d_disc_bounds():
    # the box contains the disc of radius 1/2 about its centre and sits in the disc of radius sqrt(2)/2
    es = 0.5
    c = exterior_coefficient_2d((0.5, 0.5), (0.0, 0.0), (1.0, 1.0), es)
    assert 2 * math.pi * (math.sqrt(2) / 2) ** (-es) / es < c < 2 * math.pi * 0.5 ** (-es) / es


# --- seminorm and forms ---------------------------------------------------------------------

def test_seminorm_of_zero():
    kt = build_kernel(build_grid((-1, 1), 5), 0.4, 2.0)
    assert seminorm(np.zeros(5), kt) == 0.0


def test_three_node_example():
    g = build_grid((-1, 1), 3)
    kt = build_kernel(g, 0.4, 2.0)
    u = np.array([0.0, 1.0, 0.0])
    assert oracles.relerr(seminorm(u, kt), oracles.seminorm(u, g, 0.4, 2.0)) < 1e-12


@pytest.mark.parametrize("n, N, s, e", [(1, 1, 0.3, 2.0), (1, 4, 0.45, 2.5), (1, 5, 0.2, 1.5), (2, 2, 0.3, 2.2),
                                        (2, 3, 0.35, 1.8)])
def test_forms_match_brute_force(n, N, s, e, rng):
    g = build_grid((-1, 1) if n == 1 else [(0, 1), (0, 1)], N, n)
    kt = build_kernel(g, s, e)
    for _ in range(5):
        u, v = rng.normal(size=g.size), rng.normal(size=g.size)
        assert oracles.relerr(seminorm(u, kt), oracles.seminorm(u, g, s, e)) < 1e-12
        assert oracles.relerr(form_A(u, v, kt), oracles.form(u, v, g, s, e)) < 1e-12


def test_form_diagonal_is_seminorm(rng):
    kt = build_kernel(build_grid((-1, 1), 12), 0.35, 2.5)
    for _ in range(20):
        u = rng.normal(size=12)
        assert form_A(u, u, kt) == seminorm(u, kt)
        assert form_A(u, np.zeros(12), kt) == 0.0


def test_form_derivative_of_seminorm(rng):
    kt = build_kernel(build_grid((-1, 1), 10), 0.3, 2.5)
    u, v = rng.normal(size=10), rng.normal(size=10)
    t = 1e-6
    fd = (seminorm(u + t * v, kt) - seminorm(u - t * v, kt)) / (2 * t)
    assert oracles.relerr(fd, kt.e * form_A(u, v, kt)) < 1e-7


def test_operator_apply_is_form_on_basis(rng):
    kt = build_kernel(build_grid([(0, 1), (0, 1)], 3, 2), 0.3, 2.2)
    u, v = rng.normal(size=9), rng.normal(size=9)
    assert math.isclose(np.dot(operator_apply(u, kt), v), form_A(u, v, kt), rel_tol=1e-12)


def test_p2_operator_is_symmetric_linear(rng):
    kt = build_kernel(build_grid((-1, 1), 8), 0.4, 2.0)
    A = np.column_stack([operator_apply(col, kt) for col in np.eye(8)])
    np.testing.assert_allclose(A, A.T, rtol=1e-13, atol=1e-13)
    u = rng.normal(size=8)
    np.testing.assert_allclose(A @ u, operator_apply(u, kt), rtol=1e-12)
    assert np.all(np.linalg.eigvalsh(A) > 0)


def test_constant_function_sees_only_the_exterior():
    g = build_grid([(0, 1), (0, 1)], 3, 2)
    kt = build_kernel(g, 0.3, 2.0)
    assert math.isclose(seminorm(np.ones(9), kt), 2 * math.fsum(kt.c) * g.cell, rel_tol=1e-14)


def test_grid_mismatch():
    kt = build_kernel(build_grid((-1, 1), 4), 0.3, 2.0)
    with pytest.raises(GridMismatchError):
        seminorm(np.zeros(5), kt)


def test_kernel_domain():
    with pytest.raises(DomainError):
        build_kernel(build_grid((-1, 1), 4), 1.2, 2.0)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=6, max_size=6), st.floats(-20, 20))
def test_seminorm_homogeneity(values, c):
    kt = build_kernel(build_grid((-1, 1), 6), 0.35, 2.5)
    u = np.array(values)
    assert math.isclose(seminorm(c * u, kt), abs(c) ** 2.5 * seminorm(u, kt), rel_tol=1e-10, abs_tol=1e-280)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=6, max_size=6))
def test_seminorm_does_not_grow_under_absolute_value(values):
    kt = build_kernel(build_grid((-1, 1), 6), 0.35, 2.5)
    u = np.array(values)
    assert seminorm(np.abs(u), kt) <= seminorm(u, kt) * (1 + 1e-12) + 1e-300


def test_embedding_ratio_is_grid_stable():
    ratios = []
    for N in (32, 64):
        g = build_grid((-1, 1), N)
        kp, kq = build_kernel(g, 0.35, 2.5), build_kernel(g, 0.2, 2.0)
        local = np.random.default_rng(3)
        ratios.append(max(seminorm(u, kq) ** 0.5 / seminorm(u, kp) ** 0.4
                          for u in (oracles.random_smooth(g, local) for _ in range(100))))
    assert 0.5 < ratios[1] / ratios[0] < 2.0


# --- elementary inequalities --------------------------------------------------------------

# sup over real a (b = 1 by homogeneity) of |a-b|^m / [((phi(a)-phi(b))(a-b))^(m/2) (|a|^m+|b|^m)^((2-m)/2)],
# located by a dense log scan of 8e5 points; the sup sits at a -> b
C_M = {1.2: 1.99054, 1.5: 1.41422, 1.8: 1.14056}


@pytest.mark.parametrize("l", [2.0, 2.5, 3.0])
def test_positive_part_inequality(l, rng):
    xi, eta = rng.normal(scale=3, size=(2, 10_000))
    lhs = np.abs(np.maximum(xi, 0) - np.maximum(eta, 0)) ** l
    rhs = np.abs(xi - eta) ** (l - 2) * (xi - eta) * (np.maximum(xi, 0) - np.maximum(eta, 0))
    assert np.all(lhs <= rhs + 1e-12)


@pytest.mark.parametrize("l", [2.0, 2.5, 3.0])
def test_monotonicity_inequality(l, rng):
    a, b = rng.normal(scale=3, size=(2, 10_000))
    lhs = np.abs(a - b) ** l
    rhs = 2 ** (l - 2) * (odd_power(a, l) - odd_power(b, l)) * (a - b)
    assert np.all(lhs <= rhs * (1 + 1e-12) + 1e-12)


@pytest.mark.parametrize("m", sorted(C_M))
def test_subquadratic_interpolation_inequality(m, rng):
    a, b = rng.normal(scale=3, size=(2, 10_000))
    mono = (odd_power(a, m) - odd_power(b, m)) * (a - b)
    rhs = C_M[m] * mono ** (m / 2) * (np.abs(a) ** m + np.abs(b) ** m) ** ((2 - m) / 2)
    assert np.all(np.abs(a - b) ** m <= rhs + 1e-12)


@pytest.mark.parametrize("m", sorted(C_M))
def test_frozen_constant_matches_its_limit(m):
    # the limit a -> b of the ratio equals (m-1)^(-m/2) 2^((m-2)/2)
    assert abs(C_M[m] - (m - 1) ** (-m / 2) * 2 ** ((m - 2) / 2)) < 1e-5


# --- tails and Harnack pairs ----------------------------------------------------------------

def test_tail_of_zero():
    kt = build_kernel(build_grid((-1, 1), 16), 0.3, 2.5)
    assert tail_T(np.zeros(16), [0.0], 0.3, kt) == 0.0


def test_tail_closed_form():
    g = build_grid((-1, 1), 1999)
    kt = build_kernel(g, 0.35, 2.5)
    R = 0.3
    x = g.coords[:, 0]
    u = ((x >= R) & (x <= 2 * R)).astype(float)
    es = kt.es
    exact = (R ** es * (R ** (-es) - (2 * R) ** (-es)) / es) ** (1 / (kt.e - 1))
    assert abs(tail_T(u, [0.0], R, kt) - exact) / exact < 5 * g.h


def test_tail_beyond_the_support():
    kt = build_kernel(build_grid((-1, 1), 16), 0.3, 2.5)
    assert tail_T(np.ones(16), [0.0], 1.5, kt) == 0.0
    with pytest.raises(DomainError):
        tail_T(np.ones(16), [0.0], 0.0, kt)


def test_harnack_trivial_pairs():
    g = build_grid((-1, 1), 33)
    assert harnack_ratio(np.ones(33), [0.0], 0.8, 2.0, g)[:2] == (1.0, 1.0)
    assert harnack_ratio(np.zeros(33), [0.0], 0.8, 2.0, g)[:2] == (0.0, 0.0)


def test_harnack_errors():
    g = build_grid((-1, 1), 9)
    with pytest.raises(GeometryError):
        harnack_ratio(np.ones(9), [0.0], 0.1, 2.0, g)
    u = np.ones(9)
    u[4] = -1
    with pytest.raises(PreconditionError):
        harnack_ratio(u, [0.0], 0.9, 2.0, g)


def test_harnack_reports_negative_tail():
    g = build_grid((-1, 1), 33)
    kt = build_kernel(g, 0.3, 2.5)
    u = np.ones(33)
    u[:3] = -1.0
    _, _, report = harnack_ratio(u, [0.2], 0.6, 2.0, g, tail_kernel=kt)
    assert report["tail_negative_part"] > 0
