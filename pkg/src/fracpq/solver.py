"""Critical points of the discrete energy: Nehari minimizers and the mountain pass.

All three solvers share one projected descent.  A lift maps any nonzero grid
function to a point on the constraint set (the N+ or N- root of its fibering
map, or the maximizer of the energy along its ray).  From a lifted iterate w
the method steps along the negative L^2 gradient, lifts again, and accepts the
step when the energy did not increase (halving the step up to 30 times).
Barzilai-Borwein step lengths keep the iteration count moderate.  At a lifted
point the gradient of the reduced functional equals the gradient of J, so a
vanishing residual means a genuine critical point.
"""

from __future__ import annotations

import csv
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import constants as K
from .core_grid import norm_Lm
from .energy import energy, gradient, integrals, residual_norm
from .errors import (BracketError, ConfigError, ConvergenceError, FracPQError, NoRootsError,
                     SeedingError, ThresholdError)
from .fibering import Fiber, FiberingProfile, classify, nehari_class
from .problem import Problem

MAX_HALVINGS = 30
ENERGY_SLACK = 1e-14
SEED_ATTEMPTS = 200


@dataclass(frozen=True)
class SolverOptions:
    step: float = 0.1
    tol_residual: float = 1e-8
    max_iter: int = 20000
    restarts: int = 3
    seed: int = 0
    distinct_rtol: float = 1e-3
    modes: int = 4

    def __post_init__(self):
        if not self.step > 0 or not self.tol_residual > 0 or self.max_iter < 1 or self.restarts < 1:
            raise ConfigError(f"invalid solver options {self}")

    @classmethod
    def from_dict(cls, doc: dict, seed: int | None = None) -> "SolverOptions":
        known = set(cls.__dataclass_fields__)
        bad = sorted(set(doc) - known)
        if bad:
            raise ConfigError(f"unknown solver options {bad}")
        opts = cls(**doc)
        return replace(opts, seed=seed) if seed is not None and "seed" not in doc else opts


@dataclass(frozen=True, eq=False)
class SolutionRecord:
    u: np.ndarray = field(repr=False)
    energy: float
    residual: float
    nehari_class: str
    fibering: FiberingProfile | None = field(repr=False)
    theta: float
    nonnegative: bool
    iterations: int
    lam: float
    branch: str
    seed: int = 0
    restart_energies: tuple = ()
    psi_d1: float = 0.0
    psi_d2: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self, grid=None) -> dict:
        out = {
            "branch": self.branch, "lambda": self.lam, "energy": self.energy, "residual": self.residual,
            "nehari_class": self.nehari_class, "theta": self.theta, "nonnegative": self.nonnegative,
            "iterations": self.iterations, "seed": self.seed, "restart_energies": list(self.restart_energies),
            "psi_d1": self.psi_d1, "psi_d2": self.psi_d2, "diagnostics": self.diagnostics,
            "fibering": self.fibering.to_dict() if self.fibering is not None else None,
            "u": self.u.tolist(),
        }
        if grid is not None:
            out["x"] = grid.coords.tolist() if grid.n == 2 else grid.coords[:, 0].tolist()
            out["grid"] = grid.to_dict()
        return out


# --- lifts -------------------------------------------------------------------------------

def lift_nehari(u, prob: Problem, lam: float, kind: str) -> tuple:
    """(t u, profile) with t the N+ or N- root of the fibering map of u."""
    prof = classify(u, prob, lam)
    t = prof.nplus_root if kind == "Nplus" else prof.nminus_root
    if t is None:
        raise NoRootsError(f"no {kind} root ({prof.case.value})", profile=prof)
    return t * u, prof


_GOLDEN = (math.sqrt(5) - 1) / 2


def ray_maximizer(fib: Fiber) -> float:
    """argmax_{t > 0} psi(t) by golden section in log t, polished on psi'.

    Raises BracketError when psi is unbounded above along the ray or has no
    interior maximum.
    """
    if fib.I.Ib <= 0:
        raise BracketError("energy is unbounded along this ray (Ib <= 0)")
    # bracket: psi' > 0 at a, psi' < 0 at b
    b = 1.0
    for _ in range(400):
        if fib.d1(b) < 0:
            break
        b *= 2.0
    else:
        raise BracketError("no upper bracket for the ray maximum")
    a = b / 2
    for _ in range(400):
        if fib.d1(a) > 0:
            break
        a /= 2.0
    else:
        raise BracketError("the energy has no interior maximum along this ray")
    lo, hi = math.log(a), math.log(b)
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = fib.psi(math.exp(x1)), fib.psi(math.exp(x2))
    for _ in range(200):
        if hi - lo < 1e-6:
            break
        if f1 > f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = fib.psi(math.exp(x1))
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = fib.psi(math.exp(x2))
    # polish: psi' changes sign from + to - across the maximum
    a, b = math.exp(lo) / 1.01, math.exp(hi) * 1.01
    while fib.d1(a) <= 0:
        a /= 1.5
    while fib.d1(b) >= 0:
        b *= 1.5
    for _ in range(200):
        if b / a - 1 <= 1e-13:
            break
        m = math.sqrt(a * b)
        if fib.d1(m) > 0:
            a = m
        else:
            b = m
    return math.sqrt(a * b)


def lift_ray_max(u, prob: Problem, lam: float) -> tuple:
    fib = Fiber.of(u, prob, lam)
    t = ray_maximizer(fib)
    return t * u, None


# --- the shared descent ------------------------------------------------------------------

@dataclass
class _Descent:
    w: np.ndarray
    J: float
    res: float
    iterations: int
    converged: bool


def _energy_slack(u, prob, lam) -> float:
    e = energy(u, prob, lam)
    return ENERGY_SLACK * (abs(e.term_p) + abs(e.term_q) + abs(e.term_a) + abs(e.term_b))


def projected_descent(w0, prob: Problem, lam: float, lift, opts: SolverOptions) -> _Descent:
    """Project-then-step descent from the lifted point ``w0``."""
    cell = prob.grid.cell
    w = w0
    J = energy(w, prob, lam).total
    g = gradient(w, prob, lam) / cell
    res = residual_norm(w, prob, lam, g * cell)
    alpha = opts.step
    for it in range(1, opts.max_iter + 1):
        if res < opts.tol_residual:
            return _Descent(w, J, res, it - 1, True)
        slack = _energy_slack(w, prob, lam)
        step = alpha
        accepted = False
        for _ in range(MAX_HALVINGS + 1):
            trial = w - step * g
            if np.any(trial):
                try:
                    w_new = lift(trial)[0]
                except (NoRootsError, BracketError):
                    w_new = None
                if w_new is not None:
                    J_new = energy(w_new, prob, lam).total
                    if J_new <= J + slack:
                        accepted = True
                        break
            step *= 0.5
        if not accepted:
            return _Descent(w, J, res, it, False)
        g_new = gradient(w_new, prob, lam) / cell
        s = w_new - w
        y = g_new - g
        sy = float(np.dot(s, y))
        alpha = float(np.dot(s, s)) / sy if sy > 0 else 2.0 * step
        w, J, g = w_new, J_new, g_new
        res = residual_norm(w, prob, lam, g * cell)
    return _Descent(w, J, res, opts.max_iter, res < opts.tol_residual)


# --- initial data ------------------------------------------------------------------------

def _restart_rngs(opts: SolverOptions, salt: int) -> list:
    ss = np.random.SeedSequence([opts.seed, salt])
    return [np.random.default_rng(child) for child in ss.spawn(opts.restarts)]


def initial_guess(prob: Problem, lam: float, rng, kind: str) -> np.ndarray:
    """Smooth random start whose fibering map has the requested critical point."""
    from .constants import smooth_start

    for _ in range(SEED_ATTEMPTS):
        u = smooth_start(prob.grid, rng, modes=4, positive=True)
        try:
            if kind == "mp":
                lift_ray_max(u, prob, lam)
                return u
            prof = classify(u, prob, lam)
        except (NoRootsError, BracketError):
            continue
        if kind == "Nplus" and prof.nplus_root is not None and prof.Ia > 0:
            return u
        if kind == "Nminus" and prof.nminus_root is not None:
            return u
    raise SeedingError(f"no random start produced a {kind} critical point of its fibering map")


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("FRACPQ_THREADS", "1")))
    except ValueError:
        return 1


def _run_restarts(task, rngs) -> list:
    nthreads = _threads()
    if nthreads > 1 and len(rngs) > 1:
        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            return list(pool.map(task, rngs))
    return [task(rng) for rng in rngs]


# --- Nehari branches -----------------------------------------------------------------------

def nonneg_replace(u, lam: float, prob: Problem, branch: str = "Nplus") -> np.ndarray:
    """t |u| with t the root of the fibering map of |u| on the given branch.

    For N+ members this never raises the energy, since |u| has no larger
    seminorms while keeping Ia and Ib.
    """
    v = np.abs(prob.grid.check(u))
    return lift_nehari(v, prob, lam, branch)[0]


def _finish(w, prob, lam, branch, desc: _Descent, seed, restart_energies, extra=None) -> SolutionRecord:
    e = energy(w, prob, lam)
    fib = Fiber.of(w, prob, lam)
    try:
        prof = classify(w, prob, lam)
    except FracPQError:
        prof = None
    diagnostics = dict(extra or {})
    return SolutionRecord(
        u=w, energy=e.total, residual=residual_norm(w, prob, lam), nehari_class=(
            nehari_class(w, prob, lam) if branch != "MountainPass" else "MountainPass"),
        fibering=prof, theta=e.total, nonnegative=bool(np.all(w >= 0)), iterations=desc.iterations,
        lam=lam, branch=branch, seed=seed, restart_energies=tuple(restart_energies),
        psi_d1=fib.d1(1.0), psi_d2=fib.d2(1.0), diagnostics=diagnostics,
    )


def _solve_branch(lam: float, prob: Problem, opts: SolverOptions, kind: str, S_r: float | None = None,
                  nonneg: bool = True) -> SolutionRecord:
    lift = (lambda v: lift_nehari(v, prob, lam, kind)) if kind != "mp" else (lambda v: lift_ray_max(v, prob, lam))
    salt = {"Nplus": 1, "Nminus": 2, "mp": 3}[kind]

    def task(rng):
        u0 = initial_guess(prob, lam, rng, kind)
        w0 = lift(u0)[0]
        desc = projected_descent(w0, prob, lam, lift, opts)
        if nonneg and desc.converged and np.any(desc.w < 0):
            # replace by the nonnegative representative and polish once more
            w1 = lift(np.abs(desc.w))[0]
            desc = projected_descent(w1, prob, lam, lift, opts)
        return desc

    results = _run_restarts(task, _restart_rngs(opts, salt))
    energies = [d.J for d in results]
    converged = [d for d in results if d.converged]
    if not converged:
        best = min(results, key=lambda d: d.res)
        raise ConvergenceError(
            f"{kind} descent did not converge (best residual {best.res:.3e})",
            best={"u": best.w.tolist(), "energy": best.J, "residual": best.res, "iterations": best.iterations},
        )
    best = min(converged, key=lambda d: d.J)
    branch = {"Nplus": "Nplus", "Nminus": "Nminus", "mp": "MountainPass"}[kind]
    extra = {"restart_converged": [d.converged for d in results],
             "energy_spread": float(max(d.J for d in converged) - best.J)}
    if kind == "Nplus" and S_r is not None and best.J < 0 and lam > 0:
        norm = integrals(best.w, prob).P ** (1.0 / prob.params.p)
        lo, hi = K.eqb21_bounds(lam, best.J, prob.params, S_r, prob.fields.a_dual_norm)
        lo_d, _ = K.eqb21_bounds(lam, best.J, prob.params, S_r, prob.fields.a_dual_norm, variant="derived")
        extra.update(norm=norm, bound_lo=lo, bound_lo_derived=lo_d, bound_hi=hi,
                     bounds_ok=bool(lo <= norm <= hi), bounds_derived_ok=bool(lo_d <= norm <= hi))
        if not lo_d <= norm <= hi:
            warnings.warn(f"N+ solution norm {norm:.4g} outside diagnostic bounds [{lo_d:.4g}, {hi:.4g}]")
    return _finish(best.w, prob, lam, branch, best, opts.seed, energies, extra)


def solve_Nplus(lam: float, prob: Problem, opts: SolverOptions = SolverOptions(), S_r: float | None = None,
                nonneg: bool = True) -> SolutionRecord:
    """Minimizer of J over N+ by projected descent with restarts."""
    return _solve_branch(lam, prob, opts, "Nplus", S_r, nonneg)


def solve_Nminus(lam: float, prob: Problem, opts: SolverOptions = SolverOptions(), nonneg: bool = True,
                 c_inf: float | None = None) -> SolutionRecord:
    """Minimizer of J over N- by projected descent with restarts."""
    rec = _solve_branch(lam, prob, opts, "Nminus", None, nonneg)
    if c_inf is not None:
        rec.diagnostics.update(c_infty=c_inf, below_c_infty=bool(rec.energy < c_inf))
    return rec


def solve_mountain_pass_deltaq(lam: float, prob: Problem, opts: SolverOptions = SolverOptions(),
                               eta: float | None = None, c_inf: float | None = None) -> SolutionRecord:
    """Ray inf-sup critical point for delta = q."""
    if prob.params.delta != prob.params.q:
        raise ConfigError("the mountain-pass solver needs delta = q")
    rec = _solve_branch(lam, prob, opts, "mp", None, True)
    if eta is not None:
        rec.diagnostics.update(eta=eta, above_eta=bool(rec.energy > eta))
    if c_inf is not None:
        rec.diagnostics.update(c_infty=c_inf, below_c_infty=bool(rec.energy < c_inf))
    return rec


# --- two solutions and sweeps ----------------------------------------------------------------

@dataclass(frozen=True)
class Thresholds:
    """What two_solutions needs to know about lambda."""

    lambda_0: float
    S_r: float
    S_crit: float
    c_infty: float | None = None
    C_delta: float | None = None

    @classmethod
    def compute(cls, prob: Problem, lam: float, seed: int = 0) -> "Thresholds":
        S_r, S_crit = K.sobolev_pair(prob, seed)
        prm, f = prob.params, prob.fields
        lam0 = K.lambda_0(prm, S_r, f.a_dual_norm, f.b_sup_norm)
        if prm.critical:
            cd = K.C_delta(prm, S_crit, f.a_sup_norm, prob.grid.measure)
            return cls(lam0, S_r, S_crit, K.c_infty(lam, cd, S_crit, prm), cd)
        return cls(lam0, S_r, S_crit)

    def for_lambda(self, prob: Problem, lam: float) -> "Thresholds":
        if self.C_delta is None:
            return self
        return replace(self, c_infty=K.c_infty(lam, self.C_delta, self.S_crit, prob.params))

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def distance_L2(u, v, prob: Problem) -> float:
    return norm_Lm(np.asarray(u) - np.asarray(v), 2, prob.grid)


def two_solutions(lam: float, prob: Problem, opts: SolverOptions = SolverOptions(),
                  thresholds: Thresholds | None = None, strict: bool = False) -> tuple:
    """(N+ record, N- record), both nonnegative, for sub-threshold lambda."""
    th = (thresholds or Thresholds.compute(prob, lam, opts.seed)).for_lambda(prob, lam)
    report = {"lambda": lam, **th.to_dict()}
    if prob.params.critical and (th.c_infty is None or th.c_infty <= 0):
        raise ThresholdError(f"c_infty = {th.c_infty} is not positive at lambda = {lam}", report=report)
    if not 0 < lam < th.lambda_0:
        msg = f"lambda = {lam} lies outside (0, lambda_0 = {th.lambda_0}); the two-root structure is not guaranteed"
        if strict:
            raise ThresholdError(msg, report=report)
        warnings.warn(msg)
    plus = solve_Nplus(lam, prob, opts, S_r=th.S_r)
    minus = solve_Nminus(lam, prob, opts, c_inf=th.c_infty)
    dist = distance_L2(plus.u, minus.u, prob)
    scale = max(norm_Lm(plus.u, 2, prob.grid), norm_Lm(minus.u, 2, prob.grid))
    distinct = bool(dist > opts.distinct_rtol * scale)
    for rec in (plus, minus):
        rec.diagnostics.update(pair_distance=dist, distinct=distinct)
        if th.C_delta is not None:
            floor = -th.C_delta * lam ** (prob.params.p / (prob.params.p - prob.params.delta))
            rec.diagnostics.update(energy_floor=floor, above_floor=bool(rec.energy >= floor - 1e-9))
    if not distinct:
        warnings.warn(f"N+ and N- solutions are not distinct (distance {dist:.3e})")
    return plus, minus


SWEEP_COLUMNS = ("lambda", "theta_plus", "theta_minus", "distance", "converged_plus", "converged_minus",
                 "residual_plus", "residual_minus", "error")


def sweep_lambda(lams, prob: Problem, opts: SolverOptions = SolverOptions(), thresholds: Thresholds | None = None,
                 out_csv=None) -> list:
    """Run two_solutions per lambda; failures become rows with an error message."""
    rows = []
    lams = list(lams)
    if lams and thresholds is None:
        thresholds = Thresholds.compute(prob, lams[0], opts.seed)
    for lam in lams:
        row = dict.fromkeys(SWEEP_COLUMNS, "")
        row["lambda"] = lam
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                plus, minus = two_solutions(lam, prob, opts, thresholds)
            row.update(theta_plus=plus.energy, theta_minus=minus.energy,
                       distance=plus.diagnostics["pair_distance"], converged_plus=True, converged_minus=True,
                       residual_plus=plus.residual, residual_minus=minus.residual)
        except FracPQError as exc:
            row.update(converged_plus=False, converged_minus=False, error=f"{type(exc).__name__}: {exc}")
        rows.append(row)
    if out_csv is not None:
        with open(out_csv, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return rows
