"""Explicit constants and thresholds computed from discrete quantities.

Wherever a continuum argument uses a Sobolev constant S_m the discrete
Rayleigh-quotient estimate on the current grid is used instead, so every
threshold here is grid dependent.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import optimize

from .core_grid import norm_Lm
from .errors import ConfigError, DomainError, PreconditionError
from .gagliardo import operator_apply, seminorm
from .problem import Problem

S_RESTARTS = 5


def rayleigh_quotient(u: np.ndarray, m: float, prob: Problem) -> float:
    """|u|^p_{p,s1} / |u|^p_{L^m}."""
    return seminorm(u, prob.kp) / norm_Lm(u, m, prob.grid) ** prob.params.p


def smooth_start(grid, rng: np.random.Generator, modes: int = 4, positive: bool = True) -> np.ndarray:
    """Random combination of box sine modes, optionally folded to be nonnegative."""
    x = grid.coords
    lo, hi = np.asarray(grid.lo), np.asarray(grid.hi)
    z = (x - lo) / (hi - lo)
    u = np.zeros(grid.size)
    for k in range(1, modes + 1):
        mode = np.ones(grid.size)
        for a in range(grid.n):
            mode = mode * np.sin(math.pi * k * z[:, a])
        u += rng.normal() / k * mode
    if positive:
        base = np.prod(np.sin(math.pi * z), axis=1)
        u = np.abs(u) + base
    return u


@dataclass(frozen=True)
class SobolevEstimate:
    value: float
    minimizer: np.ndarray
    restart_values: tuple


def estimate_S(m: float, prob: Problem, seed: int = 0, restarts: int = S_RESTARTS) -> SobolevEstimate:
    """Discrete S_m = min |u|^p_{p,s1} / |u|^p_{L^m} by quasi-Newton restarts.

    The best of ``restarts`` smooth random starts is returned; its quotient is
    recomputed from the returned minimizer.
    """
    prm, grid = prob.params, prob.grid
    if not 1 <= m <= prm.p_star * (1 + 1e-12):
        raise DomainError(f"S_m needs 1 <= m <= p*={prm.p_star}, got {m}")
    p, cell = prm.p, grid.cell

    def fun(u):
        P = seminorm(u, prob.kp)
        L = float(np.sum(np.abs(u) ** m)) * cell
        Nrm = L ** (p / m)
        dP = p * operator_apply(u, prob.kp)
        dN = p * L ** (p / m - 1) * np.abs(u) ** (m - 2) * u * cell if m != 1 else p * L ** (p - 1) * np.sign(u) * cell
        return P / Nrm, dP / Nrm - P * dN / Nrm ** 2

    rng = np.random.default_rng(np.random.SeedSequence([seed, 7919]))
    candidates = []
    for _ in range(restarts):
        u0 = smooth_start(grid, rng)
        u0 = u0 / norm_Lm(u0, m, grid)
        res = optimize.minimize(fun, u0, jac=True, method="L-BFGS-B",
                                options={"maxiter": 5000, "gtol": 1e-12, "ftol": 1e-15})
        u = res.x / norm_Lm(res.x, m, grid)
        # |u| never has a larger quotient, so keep the nonnegative representative
        u = np.abs(u)
        candidates.append((rayleigh_quotient(u, m, prob), u))
    value, best = min(candidates, key=lambda c: c[0])
    return SobolevEstimate(value=value, minimizer=best, restart_values=tuple(c[0] for c in candidates))


# --- closed-form constants ------------------------------------------------------------

def lambda_0(params, S_r: float, a_dual_norm: float, b_sup_norm: float) -> float:
    """Threshold below which N0 is empty and Case-1 fibers have two critical points."""
    p, d, r = params.p, params.delta, params.r
    if min(S_r, a_dual_norm, b_sup_norm) <= 0:
        raise PreconditionError("lambda_0 needs positive S_r, |a| and |b|")
    if not r > p > d:
        raise PreconditionError(f"lambda_0 needs r > p > delta, got r={r}, p={p}, delta={d}")
    first = (r - p) * S_r ** (d / p) / ((r - d) * a_dual_norm)
    second = ((p - d) * S_r ** (r / p) / ((r - d) * b_sup_norm)) ** ((p - d) / (r - p))
    return first * second


def T0_coefficient(params, S_r: float, b_sup_norm: float) -> float:
    """|u| T_0, which does not depend on u."""
    p, d, r = params.p, params.delta, params.r
    return ((p - d) * S_r ** (r / p) / ((r - d) * b_sup_norm)) ** (1.0 / (r - p))


def _require_critical(params) -> None:
    if not params.critical:
        raise ConfigError("this constant is only defined in the critical case r = p*")


def C_delta(params, S_crit: float, a_sup_norm: float, domain_measure: float) -> float:
    """Constant of the lower energy bound J >= -C_delta lam^(p/(p-delta)) in the critical case."""
    _require_critical(params)
    p, d, ps = params.p, params.delta, params.p_star
    return (((ps - d) * (p - d) / (p * d * ps))
            * ((ps - d) / (ps - p)) ** (p * d / (p - d))
            * S_crit ** (-d / (p - d))
            * a_sup_norm ** (p / (p - d))
            * domain_measure ** (p * (ps - d) / ((p - d) * ps)))


def compactness_level(params, S_crit: float) -> float:
    """(s1/n) S^(n/(p s1)), the energy level of the first bubble."""
    return params.s1 / params.n * S_crit ** (params.n / (params.p * params.s1))


def c_infty(lam: float, C_d: float, S_crit: float, params) -> float:
    _require_critical(params)
    return compactness_level(params, S_crit) - C_d * lam ** (params.p / (params.p - params.delta))


def c_infty_threshold(C_d: float, S_crit: float, params) -> float:
    """Largest lam with c_infty(lam) >= 0."""
    _require_critical(params)
    p, d = params.p, params.delta
    return (compactness_level(params, S_crit) / C_d) ** ((p - d) / p)


def eqb21_bounds(lam: float, theta_plus: float, params, S_r: float, a_dual_norm: float,
                 variant: str = "displayed") -> tuple:
    """Lower and upper bounds on |u|_{p,s1} along minimizing sequences in N+.

    ``variant="displayed"`` multiplies the lower bound's radicand by lam.
    Redoing the Holder step (lam (1/delta - 1/r) |a| S_r^(-delta/p) |u|^delta > -theta+)
    puts lam in the denominator instead; ``variant="derived"`` returns that form.
    The upper bound is the same in both.
    """
    if not theta_plus < 0:
        raise PreconditionError(f"norm bounds need theta+ < 0, got {theta_plus}")
    if variant not in ("displayed", "derived"):
        raise ConfigError(f"unknown bound variant {variant!r}")
    p, d, r = params.p, params.delta, params.r
    sd = S_r ** (d / p)
    lam_factor = lam if variant == "displayed" else 1.0 / lam
    lo = (lam_factor * (-theta_plus) * d * r * sd / ((r - d) * a_dual_norm)) ** (1.0 / d)
    hi = (lam * p * (r - d) * a_dual_norm / (d * (r - p) * sd)) ** (1.0 / (p - d))
    return lo, hi


def embedding_constants(params, S_r: float, a_dual_norm: float, b_sup_norm: float) -> tuple:
    """(C1, C2) with sum a|u|^q <= C1 |u|^q and sum b|u|^r <= C2 |u|^r (Holder plus S_r)."""
    p, q, r = params.p, params.q, params.r
    return a_dual_norm * S_r ** (-q / p), b_sup_norm * S_r ** (-r / p)


def mountain_pass_geometry(params, C1: float, C2: float) -> tuple:
    """(rho, eta, lambda_star) with I_lam > eta on the sphere |u|_{p,s1} = rho for lam < lambda_star.

    With f(t) = t^(p-q)/p - C2 t^(r-q)/r one has I_lam(u) >= rho^q (f(rho) - lam C1/q)
    on that sphere.  Taking lambda_star = q f(rho) / (2 C1) leaves I_lam > rho^q f(rho)/2 = eta.
    """
    p, q, r = params.p, params.q, params.r
    if params.delta != q:
        raise ConfigError("mountain-pass geometry needs delta = q")
    if not (C1 > 0 and C2 > 0):
        raise PreconditionError("mountain-pass geometry needs positive embedding constants")
    f = lambda t: t ** (p - q) / p - C2 * t ** (r - q) / r
    if p > q:
        rho = ((p - q) * r / (p * C2 * (r - q))) ** (1.0 / (r - p))
    else:
        # f decreases from 1/p; pick the radius where it has lost half of that
        rho = (r / (2 * p * C2)) ** (1.0 / (r - p))
    f_rho = f(rho)
    return rho, rho ** q * f_rho / 2, q * f_rho / (2 * C1)


def mountain_pass_f_max(params, C2: float) -> float:
    """Closed-form maximum of f for p > q."""
    p, q, r = params.p, params.q, params.r
    return (r - p) / (p * (r - q)) * ((p - q) * r / (p * C2 * (r - q))) ** ((p - q) / (r - p))


def alpha_lower_bound(params) -> float:
    return (params.n - params.p * params.s1) / (params.p - 1)


def critical_scales(lam: float, kappa: float, alpha: float, params) -> tuple:
    """(eps, beta) = ((lam^(p/(p-delta)))^((p-1)/(n-p s1)), eps^alpha)."""
    if not lam > 0:
        raise DomainError(f"critical scales need lam > 0, got {lam}")
    bound = alpha_lower_bound(params)
    if not alpha > bound:
        raise PreconditionError(f"alpha={alpha} must exceed (n-p s1)/(p-1)={bound}")
    p, d, n, s1 = params.p, params.delta, params.n, params.s1
    eps = (lam ** (p / (p - d))) ** ((p - 1) / (n - p * s1))
    if eps > kappa / 2:
        raise PreconditionError(f"eps={eps} violates eps <= kappa/2 with kappa={kappa}")
    return eps, eps ** alpha


# --- report -----------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstantsReport:
    S_r: float
    S_crit: float
    lambda_0: float
    T_0_coefficient: float
    C_delta: float | None = None
    c_infty: float | None = None
    c_infty_threshold: float | None = None
    bound_lo: float | None = None
    bound_hi: float | None = None
    C1: float | None = None
    C2: float | None = None
    rho_mp: float | None = None
    eta_mp: float | None = None
    lambda_star: float | None = None
    eps_of_lambda: float | None = None
    beta_of_eps_alpha: float | None = None
    lam: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def sobolev_pair(prob: Problem, seed: int = 0) -> tuple:
    """(S_r, S_crit) estimates, reusing one computation when r is critical."""
    prm = prob.params
    S_r = estimate_S(prm.r, prob, seed).value
    S_crit = S_r if prm.critical else estimate_S(prm.p_star, prob, seed).value
    return S_r, S_crit


def compute_constants(prob: Problem, lam: float | None = None, seed: int = 0, theta_plus: float | None = None,
                      kappa: float | None = None, alpha: float | None = None, S_pair=None) -> ConstantsReport:
    prm, f = prob.params, prob.fields
    lam = prm.lam if lam is None else lam
    S_r, S_crit = S_pair if S_pair is not None else sobolev_pair(prob, seed)
    lam0 = lambda_0(prm, S_r, f.a_dual_norm, f.b_sup_norm) if prm.p > prm.delta else 0.0
    out = dict(S_r=S_r, S_crit=S_crit, lambda_0=lam0,
               T_0_coefficient=T0_coefficient(prm, S_r, f.b_sup_norm) if prm.p > prm.delta else 0.0, lam=lam)
    if prm.critical and prm.p > prm.delta:
        cd = C_delta(prm, S_crit, f.a_sup_norm, prob.grid.measure)
        out.update(C_delta=cd, c_infty=c_infty(lam, cd, S_crit, prm),
                   c_infty_threshold=c_infty_threshold(cd, S_crit, prm))
    if theta_plus is not None and theta_plus < 0 and lam > 0:
        out["bound_lo"], out["bound_hi"] = eqb21_bounds(lam, theta_plus, prm, S_r, f.a_dual_norm)
    if prm.delta == prm.q:
        C1, C2 = embedding_constants(prm, S_r, f.a_dual_norm, f.b_sup_norm)
        rho, eta, lstar = mountain_pass_geometry(prm, C1, C2)
        out.update(C1=C1, C2=C2, rho_mp=rho, eta_mp=eta, lambda_star=lstar)
    if prm.critical and kappa is not None and alpha is not None and lam > 0:
        out["eps_of_lambda"], out["beta_of_eps_alpha"] = critical_scales(lam, kappa, alpha, prm)
    return ConstantsReport(**out)
