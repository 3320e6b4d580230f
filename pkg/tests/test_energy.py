import math

import numpy as np
import pytest

import oracles
from fracpq.core_grid import ProblemParams
from fracpq.energy import energy, gradient, integrals, residual_norm
from fracpq.gagliardo import operator_apply, seminorm
from fracpq.problem import Problem

PARAMS = ProblemParams(n=1, s1=0.35, s2=0.2, p=2.5, q=2.0, delta=1.5, r=4.0, lam=0.7, beta=1.3)


def a_fn(x):
    return math.cos(math.pi * x)


def b_fn(x):
    return 1 - 2 * x * x


def small_problem(N=5, **changes):
    return Problem.build(PARAMS.with_(**changes), (-1, 1), N, "cos(pi*x)", "1 - 2*x**2")


def fd_directional(prob, u, v, lam=None, t=1e-6):
    return (energy(u + t * v, prob, lam).total - energy(u - t * v, prob, lam).total) / (2 * t)


def test_zero_function():
    prob = small_problem()
    e = energy(np.zeros(5), prob)
    assert (e.term_p, e.term_q, e.term_a, e.term_b, e.total) == (0.0, 0.0, 0.0, 0.0, 0.0)
    assert not np.any(gradient(np.zeros(5), prob))
    assert residual_norm(np.zeros(5), prob) == 0.0


def test_term_isolation(rng):
    prob = Problem.build(PARAMS.with_(lam=0.0, beta=0.0), (-1, 1), 8, "cos(pi*x)", "0")
    u = rng.normal(size=8)
    assert energy(u, prob).total == seminorm(u, prob.kp) / PARAMS.p


def test_breakdown_sums_to_total(rng):
    prob = small_problem(N=16)
    e = energy(rng.normal(size=16), prob)
    assert math.isclose(e.total, e.term_p + e.term_q - e.term_a - e.term_b, rel_tol=1e-14)


@pytest.mark.parametrize("N", [1, 3, 5])
def test_energy_matches_oracle(N, rng):
    prob = small_problem(N)
    for _ in range(10):
        u = rng.normal(size=N)
        want = oracles.energy(u.tolist(), prob.grid, a_fn, b_fn, 0.35, 0.2, 2.5, 2.0, 1.5, 4.0, 0.7, 1.3)
        assert oracles.relerr(energy(u, prob).total, want) < 1e-12


def test_sine_energy_matches_oracle(default_prob):
    x = default_prob.grid.coords[:, 0]
    u = np.sin(np.pi * x)
    prm = default_prob.params
    want = oracles.energy(u.tolist(), default_prob.grid, a_fn, b_fn, prm.s1, prm.s2, prm.p, prm.q, prm.delta,
                          prm.r, 0.9, prm.beta)
    assert oracles.relerr(energy(u, default_prob, 0.9).total, want) < 1e-12


def test_gradient_matches_finite_differences(default_prob, rng):
    u = rng.normal(size=default_prob.grid.size)
    for _ in range(10):
        v = rng.normal(size=default_prob.grid.size)
        got = float(np.dot(gradient(u, default_prob, 2.0), v))
        assert oracles.relerr(got, fd_directional(default_prob, u, v, 2.0)) < 1e-5


def test_p2_gradient_is_linear_and_symmetric(rng):
    prob = Problem.build(ProblemParams(1, 0.3, 0.2, 2.0, 2.0, 1.5, 3.0, 0.0, 0.0), (-1, 1), 10, "1", "0")
    G = np.column_stack([gradient(col, prob) for col in np.eye(10)])
    np.testing.assert_allclose(G, G.T, rtol=1e-13, atol=1e-14)
    u = rng.normal(size=10)
    np.testing.assert_allclose(gradient(u, prob), G @ u, rtol=1e-12)
    np.testing.assert_allclose(gradient(u, prob), operator_apply(u, prob.kp), rtol=0)


def test_rayleigh_minimizer_is_not_critical():
    # with p = 2 and no other terms the gradient is a positive definite matrix, so its
    # first eigenvector (the Rayleigh minimizer) has residual mu_1 |v| / h^(1/2) > 0
    prob = Problem.build(ProblemParams(1, 0.3, 0.2, 2.0, 2.0, 1.5, 3.0, 0.0, 0.0), (-1, 1), 12, "1", "0")
    G = np.column_stack([gradient(col, prob) for col in np.eye(12)])
    w, V = np.linalg.eigh(G)
    assert w[0] > 0
    assert math.isclose(residual_norm(V[:, 0], prob), w[0] / prob.grid.h ** 0.5, rel_tol=1e-10)


def test_integrals_are_even(rng):
    prob = small_problem(N=9)
    u = rng.normal(size=9)
    assert integrals(u, prob) == integrals(-u, prob)
