"""Regularity diagnostics: De Giorgi truncations, oscillation decay, cutoff bubbles.

The De Giorgi check rescales a solution to v = u / (rho |u|_r), truncates at
the levels 1 - 2^-k and tracks U_k = |(v - 1 + 2^-k)^+|_r^r.  The contraction
constant C of the level recursion is not explicit, so it is measured from the
first iterates of a preliminary run and then frozen.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import constants as K
from .core_grid import Grid, norm_Lm
from .energy import integrals
from .errors import ConfigError, DomainError, GeometryError, PreconditionError
from .fibering import Fiber
from .gagliardo import seminorm, tail_T
from .problem import Problem

# --- De Giorgi ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DeGiorgiTrace:
    rho: float
    v: np.ndarray = field(repr=False)
    U: np.ndarray
    eta: float
    C: float
    decay_ok: bool
    linf_bound: float
    linf_ok: bool
    monotone_ok: bool
    slope: float
    U_negative: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "rho": self.rho, "U": self.U.tolist(), "eta": self.eta, "C": self.C, "decay_ok": self.decay_ok,
            "linf_bound": self.linf_bound, "linf_ok": self.linf_ok, "monotone_ok": self.monotone_ok,
            "slope": self.slope,
            "U_negative": None if self.U_negative is None else self.U_negative.tolist(),
        }


def truncation_levels(v: np.ndarray, K_: int) -> np.ndarray:
    """Rows w_0 = v^+ and w_k = (v - 1 + 2^-k)^+ for k = 1..K."""
    rows = [np.maximum(v, 0.0)]
    for k in range(1, K_ + 1):
        rows.append(np.maximum(v - 1.0 + 2.0 ** (-k), 0.0))
    return np.array(rows)


def _levels(u, scale, grid, r, K_):
    v = u / scale
    W = truncation_levels(v, K_)
    U = np.array([float(np.sum(w ** r)) * grid.cell for w in W])
    return v, W, U


def decay_slope(U: np.ndarray) -> float:
    """Least-squares slope of log U_k against k over the positive entries.

    Fewer than two positive entries means the levels vanish after finitely many
    steps, reported as slope -inf.
    """
    k = np.arange(len(U))
    pos = U > 0
    if pos.sum() < 2:
        return -math.inf
    return float(np.polyfit(k[pos], np.log(U[pos]), 1)[0])


def degiorgi_constant(u, grid: Grid, params, rho: float, K_: int = 3) -> float:
    """Smallest C > 1 with U_{k+1} <= C^max(k,1) (rho |u|_r)^(r^2/p - r) U_k^(1 + r s1/n), k < K_."""
    r, p, n, s1 = params.r, params.p, params.n, params.s1
    nr = norm_Lm(u, r, grid)
    _, _, U = _levels(u, rho * nr, grid, r, K_)
    pre = (rho * nr) ** (r * r / p - r)
    C = 1.0 + 1e-12
    for k in range(K_):
        if U[k] > 0 and U[k + 1] > 0:
            ratio = U[k + 1] / (pre * U[k] ** (1 + r * s1 / n))
            C = max(C, ratio ** (1.0 / max(k, 1)))
    return C


def degiorgi_rho(norm_r: float, C: float, params) -> tuple:
    """(rho, eta) from the four-way maximum with eta = C^(-n/(r s1))."""
    r, p, n, s1 = params.r, params.p, params.n, params.s1
    eta = C ** (-n / (r * s1))
    gamma = r * r * s1 / n + r - r / p
    rho = max(1.0, 1.0 / norm_r, (norm_r ** (r * r / p - r) / eta) ** (1.0 / gamma), C ** (n * n / (r * s1) ** 2))
    return rho, eta


def degiorgi_verify(u, prob: Problem, K_: int = 20, rho: float | None = None) -> DeGiorgiTrace:
    """Run the truncation scheme on u (and on -u) and check U_k <= eta^k / rho^r."""
    prm, grid = prob.params, prob.grid
    if prm.critical:
        raise PreconditionError("the L-infinity iteration needs a subcritical exponent r < p*")
    u = grid.check(u)
    r = prm.r
    if not np.any(u):
        U = np.zeros(K_ + 1)
        return DeGiorgiTrace(rho=1.0 if rho is None else rho, v=u.copy(), U=U, eta=0.5, C=1.0, decay_ok=True,
                             linf_bound=0.0, linf_ok=True, monotone_ok=True, slope=-math.inf, U_negative=U)
    nr = norm_Lm(u, r, grid)
    if rho is None:
        rho0 = max(1.0, 1.0 / nr)
        C = max(degiorgi_constant(u, grid, prm, rho0), degiorgi_constant(-u, grid, prm, rho0))
        rho, eta = degiorgi_rho(nr, C, prm)
    else:
        C = math.nan
        eta = 0.5
    scale = rho * nr
    v, W, U = _levels(u, scale, grid, r, K_)
    _, Wn, Un = _levels(-u, scale, grid, r, K_)
    monotone = bool(np.all(np.diff(W, axis=0) <= 0) and np.all(np.diff(Wn, axis=0) <= 0) and np.all(W >= 0))
    ks = np.arange(K_ + 1)
    bound = eta ** ks / rho ** r
    decay = bool(np.all(U <= bound * (1 + 1e-12)) and np.all(Un <= bound * (1 + 1e-12)))
    linf = float(np.max(np.abs(u)))
    return DeGiorgiTrace(rho=rho, v=v, U=U, eta=eta, C=C, decay_ok=decay, linf_bound=scale,
                         linf_ok=bool(linf <= scale), monotone_ok=monotone, slope=decay_slope(U), U_negative=Un)


# --- oscillation decay -----------------------------------------------------------------------


@dataclass(frozen=True)
class RegularityReport:
    alpha_fit: float | None
    osc_table: tuple
    tails: dict
    Q_value: float
    alpha_bound: float
    below_bound: bool | None

    def to_dict(self) -> dict:
        return {"alpha_fit": self.alpha_fit, "osc_table": [list(row) for row in self.osc_table],
                "tails": self.tails, "Q_value": self.Q_value, "alpha_bound": self.alpha_bound,
                "below_bound": self.below_bound}


def dyadic_radii(grid: Grid, x0, R0: float | None = None, min_nodes: int = 3) -> np.ndarray:
    """R0, R0/2, ... while the ball keeps ``min_nodes`` nodes and R >= 2h.

    The default R0 is half the distance from x0 to the boundary, or a quarter
    of the smallest side when x0 sits next to the boundary.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if R0 is None:
        reach = float(np.min(np.minimum(x0 - np.asarray(grid.lo), np.asarray(grid.hi) - x0)))
        R0 = max(0.5 * reach, 0.25 * float(np.min(np.subtract(grid.hi, grid.lo))) if reach < 4 * grid.h else 0.0)
    radii = []
    R = R0
    d = np.sqrt(np.sum((grid.coords - x0) ** 2, axis=1))
    while np.count_nonzero(d <= R) >= min_nodes and R >= 2 * grid.h:
        radii.append(R)
        R /= 2
    return np.array(radii)


def oscillations(u, grid: Grid, x0, radii) -> np.ndarray:
    """max - min of u over each closed ball B_R(x0).

    A ball reaching outside the domain also sees the zero extension of u.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    d = np.sqrt(np.sum((grid.coords - x0) ** 2, axis=1))
    reach = float(np.min(np.minimum(x0 - np.asarray(grid.lo), np.asarray(grid.hi) - x0)))
    out = []
    for R in radii:
        inside = d <= R
        if np.count_nonzero(inside) < 3:
            raise GeometryError(f"ball of radius {R} holds fewer than 3 nodes")
        vals = u[inside]
        if R > reach:
            vals = np.append(vals, 0.0)
        out.append(float(np.max(vals) - np.min(vals)))
    return np.array(out)


def fit_exponent(radii, osc) -> float | None:
    """Slope of log osc against log radius; None when every oscillation vanishes."""
    radii, osc = np.asarray(radii, float), np.asarray(osc, float)
    pos = osc > 0
    if pos.sum() < 2:
        return None
    return float(np.polyfit(np.log(radii[pos]), np.log(osc[pos]), 1)[0])


def holder_exponent(u, x0, radii, prob: Problem) -> RegularityReport:
    """Fit osc_{B_r(x0)} u ~ r^alpha over the given radii."""
    grid, prm = prob.grid, prob.params
    u = grid.check(u)
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    lo, hi = np.asarray(grid.lo), np.asarray(grid.hi)
    if np.any(x0 <= lo) or np.any(x0 >= hi):
        raise GeometryError(f"x0 = {x0} is not interior")
    radii = np.sort(np.asarray(radii, dtype=float))[::-1]
    if radii.size < 2 or np.any(radii <= 0):
        raise GeometryError("need at least two positive radii")
    osc = oscillations(u, grid, x0, radii)
    alpha = fit_exponent(radii, osc)
    R0 = float(radii[0])
    Tp = tail_T(u, x0, R0, prob.kp)
    Tq = tail_T(u, x0, R0, prob.kq)
    bound = (prm.p * prm.s1 - prm.q * prm.s2) / (prm.p - 1)
    return RegularityReport(
        alpha_fit=alpha, osc_table=tuple((float(R), float(o)) for R, o in zip(radii, osc)),
        tails={"T_p": Tp, "T_q": Tq, "R0": R0}, Q_value=float(np.max(np.abs(u))) + Tp,
        alpha_bound=bound, below_bound=None if alpha is None else bool(alpha < bound),
    )


# --- cutoff bubbles ---------------------------------------------------------------------------


def model_profile(r, params, c1: float = 1.0) -> np.ndarray:
    """Constant core glued to the power tail c1 r^(-(n - p s1)/(p - 1))."""
    r = np.asarray(r, dtype=float)
    decay = (params.n - params.p * params.s1) / (params.p - 1)
    return np.where(r <= 1.0, c1, c1 * np.maximum(r, 1.0) ** (-decay))


@dataclass(frozen=True)
class CutoffParams:
    eps: float
    kappa: float
    theta: float = 2.0
    c1: float = 1.0

    def __post_init__(self):
        if not (0 < self.eps <= self.kappa / 2):
            raise DomainError(f"need 0 < eps <= kappa/2, got eps={self.eps}, kappa={self.kappa}")
        if not self.theta > 1:
            raise DomainError(f"theta must exceed 1, got {self.theta}")


class Cutoff:
    """The rescaled profile U_eps and the truncation maps m, g, G."""

    def __init__(self, cp: CutoffParams, params):
        self.cp, self.params = cp, params
        self.U_kappa = float(self.U_eps(cp.kappa))
        self.U_theta = float(self.U_eps(cp.theta * cp.kappa))
        self.m = self.U_kappa / (self.U_kappa - self.U_theta)

    def U_eps(self, r):
        prm, cp = self.params, self.cp
        return cp.eps ** (-(prm.n - prm.p * prm.s1) / prm.p) * model_profile(np.asarray(r) / cp.eps, prm, cp.c1)

    def g(self, t):
        t = np.asarray(t, dtype=float)
        p, m = self.params.p, self.m
        mid = m ** p * (t - self.U_theta)
        top = t + self.U_kappa * (m ** (p - 1) - 1)
        return np.where(t <= self.U_theta, 0.0, np.where(t < self.U_kappa, mid, top))

    def G(self, t):
        t = np.asarray(t, dtype=float)
        mid = self.m * (t - self.U_theta)
        # G is the identity from U_kappa on, so u_{eps,kappa} = U_eps exactly on B_kappa
        return np.where(t <= self.U_theta, 0.0, np.where(t < self.U_kappa, mid, t))

    def radial(self, r):
        return self.G(self.U_eps(r))


def _center_distances(grid: Grid, center):
    c = grid.center if center is None else np.atleast_1d(np.asarray(center, dtype=float))
    return c, np.sqrt(np.sum((grid.coords - c) ** 2, axis=1))


def build_cutoff(cp: CutoffParams, grid: Grid, params, center=None) -> np.ndarray:
    """u_{eps,kappa}(x) = G(U_eps(|x - center|)) sampled on the grid."""
    c, d = _center_distances(grid, center)
    reach = float(np.min(np.minimum(c - np.asarray(grid.lo), np.asarray(grid.hi) - c)))
    if cp.theta * cp.kappa >= reach:
        raise GeometryError(f"ball of radius theta*kappa = {cp.theta * cp.kappa} leaves the domain")
    return Cutoff(cp, params).radial(d)


TREND_COLUMNS = ("eps", "ratio", "seminorm", "mass", "excess", "deficit")


@dataclass(frozen=True)
class CutoffTrendTable:
    rows: tuple
    level: float
    c1: float
    excess_slope: float | None
    deficit_slope: float | None
    excess_exponent: float
    deficit_exponent: float
    excess_decreasing: bool

    def to_dict(self) -> dict:
        return {"rows": [dict(zip(TREND_COLUMNS, r)) for r in self.rows], "level": self.level, "c1": self.c1,
                "excess_slope": self.excess_slope, "deficit_slope": self.deficit_slope,
                "excess_exponent": self.excess_exponent, "deficit_exponent": self.deficit_exponent,
                "excess_decreasing": self.excess_decreasing}


def lemm1_trends(kappa: float, eps_list, prob: Problem, theta: float = 2.0, S_crit: float | None = None) -> CutoffTrendTable:
    """Seminorm excess and mass deficit of u_{eps,kappa} against S^(n/(p s1)).

    The profile amplitude c1 is fixed once so that seminorm and L^{p*} mass agree
    at the first eps (the normalization of the Euler-Lagrange equation of S).
    """
    prm, grid = prob.params, prob.grid
    eps_list = [float(e) for e in eps_list]
    for e in eps_list:
        if not 0 < e <= kappa / 2:
            raise DomainError(f"eps={e} outside (0, kappa/2]")
    ps = prm.p_star
    if S_crit is None:
        S_crit = K.estimate_S(ps, prob).value
    level = S_crit ** (prm.n / (prm.p * prm.s1))
    c1 = 1.0
    if eps_list:
        u1 = build_cutoff(CutoffParams(eps_list[0], kappa, theta, 1.0), grid, prm)
        P1, M1 = seminorm(u1, prob.kp), float(np.sum(np.abs(u1) ** ps)) * grid.cell
        c1 = (P1 / M1) ** (1.0 / (ps - prm.p))
    rows = []
    for e in eps_list:
        u = build_cutoff(CutoffParams(e, kappa, theta, c1), grid, prm)
        P = seminorm(u, prob.kp)
        Mass = float(np.sum(np.abs(u) ** ps)) * grid.cell
        rows.append((e, e / kappa, P, Mass, P - level, level - Mass))
    ratios = np.array([r[1] for r in rows])
    excess = np.array([r[4] for r in rows])
    deficit = np.array([r[5] for r in rows])

    def slope(y):
        pos = y > 0
        if pos.sum() < 2:
            return None
        return float(np.polyfit(np.log(ratios[pos]), np.log(y[pos]), 1)[0])

    order = np.argsort(ratios)[::-1]
    decreasing = bool(np.all(np.diff(excess[order]) < 0)) if len(rows) > 1 else True
    return CutoffTrendTable(
        rows=tuple(rows), level=level, c1=c1, excess_slope=slope(excess), deficit_slope=slope(deficit),
        excess_exponent=(prm.n - prm.p * prm.s1) / (prm.p - 1), deficit_exponent=prm.n / (prm.p - 1),
        excess_decreasing=decreasing,
    )


# --- critical probe ----------------------------------------------------------------------------


@dataclass(frozen=True)
class ProbeResult:
    sup_ray: float
    c_inf: float
    passed: bool
    eps: float
    beta: float
    t_hat: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def probe_hypothesis_ok(params) -> bool:
    lower = params.n * (params.p - 1) / (params.n - params.p * params.s1)
    return 1 < lower <= params.delta < params.q


def critical_probe(lam: float, prob: Problem, kappa: float, alpha: float, theta: float = 2.0,
                   S_crit: float | None = None) -> ProbeResult:
    """Compare sup_t J(t u_{eps,kappa}) with c_infty, with (eps, beta) from the critical scalings."""
    from .solver import ray_maximizer

    prm = prob.params
    if not prm.critical:
        raise ConfigError("the critical probe needs r = p*")
    if not probe_hypothesis_ok(prm):
        raise PreconditionError("the probe needs 1 < n(p-1)/(n-p s1) <= delta < q")
    eps, beta = K.critical_scales(lam, kappa, alpha, prm)
    if S_crit is None:
        S_crit = K.estimate_S(prm.p_star, prob).value
    cd = K.C_delta(prm, S_crit, prob.fields.a_sup_norm, prob.grid.measure)
    c_inf = K.c_infty(lam, cd, S_crit, prm)
    pb = prob.with_params(beta=beta, lam=lam)
    u = build_cutoff(CutoffParams(eps, kappa, theta), pb.grid, prm)
    fib = Fiber.from_integrals(integrals(u, pb), pb, lam)
    t_hat = ray_maximizer(fib)
    sup_ray = fib.psi(t_hat)
    return ProbeResult(sup_ray=sup_ray, c_inf=c_inf, passed=bool(sup_ray < c_inf), eps=eps, beta=beta, t_hat=t_hat)
