"""Energy functional J_lambda, its weak-form gradient and residual norm.

For delta = q the same functional is the mountain-pass energy I_lambda.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gagliardo import odd_power, operator_apply, seminorm
from .problem import Problem


@dataclass(frozen=True)
class Integrals:
    """The four homogeneous integrals of a grid function."""

    P: float
    Q: float
    Ia: float
    Ib: float


@dataclass(frozen=True)
class EnergyBreakdown:
    term_p: float
    term_q: float
    term_a: float
    term_b: float
    total: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def weighted_power(u: np.ndarray, weight: np.ndarray, m: float, cell: float) -> float:
    """sum_i weight_i |u_i|^m h^n with compensated summation."""
    return math.fsum((weight * np.abs(u) ** m).tolist()) * cell


def integrals(u: np.ndarray, prob: Problem) -> Integrals:
    u = prob.grid.check(u)
    prm, f, cell = prob.params, prob.fields, prob.grid.cell
    return Integrals(
        P=seminorm(u, prob.kp),
        Q=seminorm(u, prob.kq),
        Ia=weighted_power(u, f.a_values, prm.delta, cell),
        Ib=weighted_power(u, f.b_values, prm.r, cell),
    )


def breakdown_from_integrals(I: Integrals, prob: Problem, lam: float | None = None) -> EnergyBreakdown:
    prm = prob.params
    lam = prm.lam if lam is None else lam
    tp = I.P / prm.p
    tq = prm.beta * I.Q / prm.q
    ta = lam * I.Ia / prm.delta
    tb = I.Ib / prm.r
    return EnergyBreakdown(tp, tq, ta, tb, tp + tq - ta - tb)


def energy(u: np.ndarray, prob: Problem, lam: float | None = None) -> EnergyBreakdown:
    """J_lambda(u) split into its four terms; ``lam`` overrides params.lam."""
    return breakdown_from_integrals(integrals(u, prob), prob, lam)


def gradient(u: np.ndarray, prob: Problem, lam: float | None = None) -> np.ndarray:
    """Weak residual against every nodal indicator function.

    Component k is A_p(u, e_k) + beta A_q(u, e_k) - lam sum a|u|^(delta-2)u e_k h^n
    - sum b|u|^(r-2)u e_k h^n, so that <gradient, v> is the derivative of J along v.
    """
    u = prob.grid.check(u)
    prm, f, cell = prob.params, prob.fields, prob.grid.cell
    lam = prm.lam if lam is None else lam
    g = operator_apply(u, prob.kp)
    if prm.beta != 0.0:
        g = g + prm.beta * operator_apply(u, prob.kq)
    g = g - lam * f.a_values * odd_power(u, prm.delta) * cell
    g = g - f.b_values * odd_power(u, prm.r) * cell
    return g


def residual_norm(u: np.ndarray, prob: Problem, lam: float | None = None, grad: np.ndarray | None = None) -> float:
    """Discrete L^2 norm of the strong residual, |g|_2 / h^(n/2)."""
    g = gradient(u, prob, lam) if grad is None else grad
    return float(np.linalg.norm(g)) / prob.grid.cell ** 0.5
