"""Fibering maps t -> J(t u), the auxiliary map M_u and Nehari projections.

Everything here depends on u only through the four integrals
P = |u|^p_{p,s1}, Q = |u|^q_{q,s2}, Ia = sum a|u|^delta h^n and
Ib = sum b|u|^r h^n, so the scalar work is done on an :class:`Integrals`
record.  With c = lam * Ia,

    psi'(t) = t^(p-1) P + beta t^(q-1) Q - lam t^(delta-1) Ia - t^(r-1) Ib
            = t^(delta-1) (M(t) - c),
    M(t)    = t^(p-delta) P + beta t^(q-delta) Q - t^(r-delta) Ib.

At a root t of psi', psi''(t) = t^(delta-1) M'(t), so roots on the increasing
branch of M lie in N+ and roots on the decreasing branch lie in N-.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .energy import Integrals, integrals
from .errors import DomainError, NoRootsError, PreconditionError
from .problem import Problem

ROOT_RTOL = 1e-12          # relative bracket width of the bisection
ROOT_CHECK = 1e-9          # |psi'| tolerance relative to the size of its terms
DEGENERATE_RTOL = 1e-14    # |Ia| or |Ib| below this fraction of their scale counts as zero
N0_BAND = 1e-9             # psi''(1) band reported as N0-ambiguous
_MAX_EXPANSIONS = 400


class FiberCase(str, enum.Enum):
    BothPositive = "BothPositive"
    IaNegIbPos = "IaNegIbPos"
    IaPosIbNeg = "IaPosIbNeg"
    BothNegative = "BothNegative"


THEORY_COUNT = {
    FiberCase.BothPositive: 2,
    FiberCase.IaNegIbPos: 1,
    FiberCase.IaPosIbNeg: 1,
    FiberCase.BothNegative: 0,
}


@dataclass(frozen=True)
class Fiber:
    """Scalar fibering map of one grid function."""

    I: Integrals
    p: float
    q: float
    delta: float
    r: float
    beta: float
    lam: float

    @classmethod
    def of(cls, u, prob: Problem, lam: float | None = None) -> "Fiber":
        return cls.from_integrals(integrals(u, prob), prob, lam)

    @classmethod
    def from_integrals(cls, I: Integrals, prob: Problem, lam: float | None = None) -> "Fiber":
        prm = prob.params
        return cls(I, prm.p, prm.q, prm.delta, prm.r, prm.beta, prm.lam if lam is None else lam)

    # psi and its derivatives ------------------------------------------------------
    def psi(self, t: float) -> float:
        if t < 0:
            raise DomainError(f"fibering map needs t >= 0, got {t}")
        if t == 0:
            return 0.0
        I = self.I
        return (t ** self.p * I.P / self.p + self.beta * t ** self.q * I.Q / self.q
                - self.lam * t ** self.delta * I.Ia / self.delta - t ** self.r * I.Ib / self.r)

    def d1_terms(self, t: float) -> tuple:
        _positive(t)
        I = self.I
        return (t ** (self.p - 1) * I.P, self.beta * t ** (self.q - 1) * I.Q,
                -self.lam * t ** (self.delta - 1) * I.Ia, -t ** (self.r - 1) * I.Ib)

    def d1(self, t: float) -> float:
        return math.fsum(self.d1_terms(t))

    def d1_scale(self, t: float) -> float:
        return math.fsum(abs(x) for x in self.d1_terms(t))

    def d2_terms(self, t: float) -> tuple:
        _positive(t)
        I = self.I
        return ((self.p - 1) * t ** (self.p - 2) * I.P, self.beta * (self.q - 1) * t ** (self.q - 2) * I.Q,
                -self.lam * (self.delta - 1) * t ** (self.delta - 2) * I.Ia,
                -(self.r - 1) * t ** (self.r - 2) * I.Ib)

    def d2(self, t: float) -> float:
        return math.fsum(self.d2_terms(t))

    def d2_scale(self, t: float) -> float:
        return math.fsum(abs(x) for x in self.d2_terms(t))

    # the auxiliary map M ------------------------------------------------------------
    def M(self, t: float) -> float:
        _positive(t)
        I, d = self.I, self.delta
        return t ** (self.p - d) * I.P + self.beta * t ** (self.q - d) * I.Q - t ** (self.r - d) * I.Ib

    def M_d1(self, t: float) -> float:
        _positive(t)
        I, d = self.I, self.delta
        return ((self.p - d) * t ** (self.p - d - 1) * I.P + self.beta * (self.q - d) * t ** (self.q - d - 1) * I.Q
                - (self.r - d) * t ** (self.r - d - 1) * I.Ib)

    def M_at_zero(self) -> float:
        """Limit of M(t) as t -> 0+."""
        I, d = self.I, self.delta
        value = 0.0
        if self.p == d:
            value += I.P
        if self.q == d:
            value += self.beta * I.Q
        return value

    def _shape(self, t: float) -> float:
        """t^(1+delta-p) M'(t): strictly decreasing in t when Ib > 0."""
        I, d = self.I, self.delta
        return ((self.p - d) * I.P + self.beta * (self.q - d) * t ** (self.q - self.p) * I.Q
                - (self.r - d) * t ** (self.r - self.p) * I.Ib)

    def t_star(self) -> float | None:
        I = self.I
        if I.Ib <= 0 or self.p == self.delta:
            return None
        return ((self.p - self.delta) * I.P / ((self.r - self.delta) * I.Ib)) ** (1.0 / (self.r - self.p))


def _positive(t: float) -> None:
    if not t > 0:
        raise DomainError(f"need t > 0, got {t}")


def _bisect_log(f, lo: float, hi: float, rtol: float = ROOT_RTOL) -> float:
    """Sign-robust bisection in log t; f(lo) and f(hi) must have opposite signs."""
    flo = f(lo)
    for _ in range(2000):
        if hi / lo - 1.0 <= rtol:
            break
        mid = math.sqrt(lo * hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return math.sqrt(lo * hi)


def _expand(f, t0: float, factor: float) -> float:
    """Walk t0 geometrically (factor > 1 up, < 1 down) until f(t) <= 0."""
    t = t0
    for _ in range(_MAX_EXPANSIONS):
        if f(t) <= 0:
            return t
        t *= factor
    raise PreconditionError("fibering bracket expansion did not terminate")


@dataclass(frozen=True)
class FiberingProfile:
    """Case, integrals and critical points of one fibering map."""

    P: float
    Q: float
    Ia: float
    Ib: float
    lam: float
    case: FiberCase
    degenerate: tuple = ()
    t_star: float | None = None
    t_max: float | None = None
    M_max: float | None = None
    t1: float | None = None
    t2: float | None = None
    roots: tuple = ()
    kinds: tuple = ()
    no_roots: bool = False
    fiber: Fiber | None = field(default=None, repr=False, compare=False)

    @property
    def theory(self) -> int:
        return THEORY_COUNT[self.case]

    @property
    def nplus_root(self) -> float | None:
        return next((t for t, k in zip(self.roots, self.kinds) if k == "Nplus"), None)

    @property
    def nminus_root(self) -> float | None:
        return next((t for t, k in zip(self.roots, self.kinds) if k == "Nminus"), None)

    def to_dict(self) -> dict:
        return {
            "P": self.P, "Q": self.Q, "Ia": self.Ia, "Ib": self.Ib, "lambda": self.lam,
            "case": self.case.value, "degenerate": list(self.degenerate), "theory": self.theory,
            "t_star": self.t_star, "t_max": self.t_max, "M_max": self.M_max,
            "t1": self.t1, "t2": self.t2, "roots": list(self.roots), "kinds": list(self.kinds),
            "no_roots": self.no_roots,
        }


def classify_integrals(I: Integrals, prob: Problem, lam: float | None = None, scales=None) -> FiberingProfile:
    """Classify a fibering map from its integrals and locate its critical points.

    ``scales`` gives the magnitudes (sum |a||u|^delta h^n, sum |b||u|^r h^n)
    used by the degeneracy test; without it only exact zeros are degenerate.
    """
    fib = Fiber.from_integrals(I, prob, lam)
    if not I.P > 0:
        raise PreconditionError("fibering map of the zero function")
    sa, sb = scales if scales is not None else (abs(I.Ia), abs(I.Ib))
    degenerate = []
    Ia, Ib = I.Ia, I.Ib
    if abs(Ia) <= DEGENERATE_RTOL * sa:
        degenerate.append("Ia")
        Ia = 0.0
    if abs(Ib) <= DEGENERATE_RTOL * sb:
        degenerate.append("Ib")
        Ib = 0.0
    if degenerate:
        fib = Fiber(Integrals(I.P, I.Q, Ia, Ib), fib.p, fib.q, fib.delta, fib.r, fib.beta, fib.lam)
    # zero Ia counts with the sign that keeps the root structure of its Ib-case
    ia_pos = Ia > 0 or (Ia == 0 and Ib < 0)
    ib_pos = Ib >= 0
    if ib_pos:
        case = FiberCase.BothPositive if ia_pos else FiberCase.IaNegIbPos
    else:
        case = FiberCase.IaPosIbNeg if ia_pos else FiberCase.BothNegative

    c = fib.lam * Ia
    M0 = fib.M_at_zero()
    roots, kinds = [], []
    t_max = M_max = None

    if Ib > 0 and fib.p > fib.delta:
        # M rises from M0 to its unique maximum at t_max, then decreases to -inf
        lo = _expand(lambda t: -fib._shape(t), 1.0, 0.5)
        hi = _expand(fib._shape, 1.0, 2.0)
        t_max = _bisect_log(fib._shape, lo, hi) if fib._shape(lo) != 0 else lo
        M_max = fib.M(t_max)
        g = lambda t: fib.M(t) - c
        if M0 < c < M_max:
            a = _expand(g, t_max, 0.5)
            roots.append(_bisect_log(g, a, t_max))
            kinds.append("Nplus")
        if c < M_max:
            b = _expand(g, t_max, 2.0)
            roots.append(_bisect_log(g, t_max, b))
            kinds.append("Nminus")
        elif c == M_max:
            roots.append(t_max)
            kinds.append("N0")
    elif Ib > 0:
        # p = q = delta: M decreases from M0 to -inf
        if c < M0:
            g = lambda t: fib.M(t) - c
            b = _expand(g, 1.0, 2.0)
            a = _expand(lambda t: -g(t), 1.0, 0.5)
            roots.append(_bisect_log(g, a, b))
            kinds.append("Nminus")
    else:
        # Ib <= 0: M increases from M0 to +inf
        if c > M0:
            g = lambda t: c - fib.M(t)
            a = _expand(lambda t: -g(t), 1.0, 0.5)
            b = _expand(g, 1.0, 2.0)
            roots.append(_bisect_log(g, a, b))
            kinds.append("Nplus")

    for t in roots:
        if abs(fib.d1(t)) > ROOT_CHECK * fib.d1_scale(t):
            raise PreconditionError(f"fibering root t={t} failed the psi' check")

    no_roots = case is FiberCase.BothPositive and not roots
    return FiberingProfile(
        P=I.P, Q=I.Q, Ia=I.Ia, Ib=I.Ib, lam=fib.lam, case=case, degenerate=tuple(degenerate),
        t_star=fib.t_star(), t_max=t_max, M_max=M_max,
        t1=roots[0] if roots else None, t2=roots[1] if len(roots) > 1 else None,
        roots=tuple(roots), kinds=tuple(kinds), no_roots=no_roots, fiber=fib,
    )


def weight_scales(u, prob: Problem) -> tuple:
    u = np.abs(prob.grid.check(u))
    f, prm, cell = prob.fields, prob.params, prob.grid.cell
    return (math.fsum((np.abs(f.a_values) * u ** prm.delta).tolist()) * cell,
            math.fsum((np.abs(f.b_values) * u ** prm.r).tolist()) * cell)


def classify(u, prob: Problem, lam: float | None = None) -> FiberingProfile:
    """FiberingProfile of the grid function ``u``."""
    u = prob.grid.check(u)
    if not np.any(u):
        raise PreconditionError("cannot classify the zero function")
    return classify_integrals(integrals(u, prob), prob, lam, weight_scales(u, prob))


def psi(u, t, prob: Problem, lam=None) -> float:
    return Fiber.of(u, prob, lam).psi(t)


def psi_d1(u, t, prob: Problem, lam=None) -> float:
    return Fiber.of(u, prob, lam).d1(t)


def psi_d2(u, t, prob: Problem, lam=None) -> float:
    return Fiber.of(u, prob, lam).d2(t)


def M(u, t, prob: Problem) -> float:
    return Fiber.of(u, prob).M(t)


def M_d1(u, t, prob: Problem) -> float:
    return Fiber.of(u, prob).M_d1(t)


def E_lambda(u, prob: Problem, lam: float | None = None) -> float:
    """[(r-p) P + beta (r-q) Q] / (r-delta) - lam Ia."""
    I = integrals(u, prob)
    prm = prob.params
    lam = prm.lam if lam is None else lam
    return ((prm.r - prm.p) * I.P + prm.beta * (prm.r - prm.q) * I.Q) / (prm.r - prm.delta) - lam * I.Ia


def nehari_class(u, prob: Problem, lam: float | None = None) -> str:
    """'Nplus', 'Nminus' or 'N0' from the sign of psi''_u(1) outside a relative band."""
    fib = Fiber.of(u, prob, lam)
    value = fib.d2(1.0)
    band = N0_BAND * fib.d2_scale(1.0)
    if value > band:
        return "Nplus"
    if value < -band:
        return "Nminus"
    return "N0"


def _project(u, prob: Problem, lam, kind: str):
    u = prob.grid.check(u)
    prof = classify(u, prob, lam)
    t = prof.nplus_root if kind == "Nplus" else prof.nminus_root
    if t is None:
        raise NoRootsError(f"fibering map has no {kind} critical point ({prof.case.value})", profile=prof)
    return t * u, prof


def project_Nplus(u, prob: Problem, lam: float | None = None) -> np.ndarray:
    """Scale u onto the local-minimum branch N+ of its fibering map."""
    return _project(u, prob, lam, "Nplus")[0]


def project_Nminus(u, prob: Problem, lam: float | None = None) -> np.ndarray:
    """Scale u onto the local-maximum branch N- of its fibering map."""
    return _project(u, prob, lam, "Nminus")[0]


def profile_table(prof: FiberingProfile, t_lo: float = 1e-4, t_hi: float = 1e4, num: int = 400) -> np.ndarray:
    """Columns (t, psi, psi', psi'') on a log grid, for plotting."""
    fib = prof.fiber
    ts = np.geomspace(t_lo, t_hi, num)
    return np.array([[t, fib.psi(t), fib.d1(t), fib.d2(t)] for t in ts])
