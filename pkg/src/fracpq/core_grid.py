"""Problem parameters, uniform grids, weight fields and discrete L^m norms.

Functions on the grid are plain 1-D numpy arrays holding the values at the
interior nodes (C order for n = 2).  They are implicitly zero on the
complement of the domain.  Integrals use the midpoint rule with weight h^n
per node.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError, GridMismatchError

CRITICAL_RTOL = 1e-12


def critical_exponent(n: int, p: float, s: float) -> float:
    """Fractional Sobolev exponent n p / (n - p s)."""
    return n * p / (n - p * s)


@dataclass(frozen=True)
class ProblemParams:
    """Scalar data of the doubly nonlocal (p, q) Dirichlet problem.

    ``lam`` is the coefficient of the concave term a|u|^(delta-2)u and
    ``beta`` multiplies the (q, s2) operator.
    """

    n: int
    s1: float
    s2: float
    p: float
    q: float
    delta: float
    r: float
    lam: float = 0.0
    beta: float = 1.0

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ConfigError(f"dimension n must be 1 or 2, got {self.n}")
        if not 0 < self.s2 < self.s1 < 1:
            raise ConfigError(f"need 0 < s2 < s1 < 1, got s1={self.s1}, s2={self.s2}")
        if not self.n > self.p * self.s1:
            raise ConfigError(f"need n > p*s1, got n={self.n}, p*s1={self.p * self.s1}")
        if not 1 < self.delta <= self.q <= self.p < self.r:
            raise ConfigError(
                f"need 1 < delta <= q <= p < r, got delta={self.delta}, q={self.q}, "
                f"p={self.p}, r={self.r}"
            )
        ps = self.p_star
        if self.r > ps and not math.isclose(self.r, ps, rel_tol=CRITICAL_RTOL):
            raise ConfigError(f"r={self.r} exceeds the critical exponent {ps}")
        if self.lam < 0 or self.beta < 0:
            raise ConfigError("lambda and beta must be nonnegative")

    @property
    def p_star(self) -> float:
        return critical_exponent(self.n, self.p, self.s1)

    @property
    def critical(self) -> bool:
        return math.isclose(self.r, self.p_star, rel_tol=CRITICAL_RTOL)

    @property
    def dual_exponent(self) -> float:
        """Exponent r/(r - delta) of the space the weight a is measured in."""
        return self.r / (self.r - self.delta)

    def with_(self, **changes) -> "ProblemParams":
        values = {k: getattr(self, k) for k in self.__dataclass_fields__}
        values.update(changes)
        return ProblemParams(**values)

    def to_dict(self) -> dict:
        return {
            "n": self.n, "s1": self.s1, "s2": self.s2, "p": self.p, "q": self.q,
            "delta": self.delta, "r": self.r, "lambda": self.lam, "beta": self.beta,
        }


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform grid of N interior nodes per axis on a box domain."""

    lo: tuple
    hi: tuple
    N: int
    n: int
    h: float
    coords: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.N ** self.n

    @property
    def cell(self) -> float:
        """Quadrature weight h^n of one node."""
        return self.h ** self.n

    @property
    def measure(self) -> float:
        """Lebesgue measure of the domain."""
        return float(np.prod(np.subtract(self.hi, self.lo)))

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (np.asarray(self.lo) + np.asarray(self.hi))

    @property
    def axes(self) -> list[np.ndarray]:
        return [self.lo[a] + self.h * np.arange(1, self.N + 1) for a in range(self.n)]

    def check(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.shape != (self.size,):
            raise GridMismatchError(f"grid function has shape {u.shape}, grid expects ({self.size},)")
        return u

    def same_as(self, other: "Grid") -> bool:
        return (
            self is other
            or (self.n == other.n and self.N == other.N and self.lo == other.lo and self.hi == other.hi)
        )

    def to_dict(self) -> dict:
        bounds = [[self.lo[a], self.hi[a]] for a in range(self.n)]
        return {"n": self.n, "N": self.N, "bounds": bounds[0] if self.n == 1 else bounds}


def build_grid(bounds, N: int, n: int = 1) -> Grid:
    """Uniform grid on a box with ``N`` interior nodes per axis.

    ``bounds`` is ``(lo, hi)`` for n = 1 and ``[(lo0, hi0), (lo1, hi1)]``
    for n = 2.  Both axes of a 2-D box must have the same spacing.
    """
    if n not in (1, 2):
        raise ConfigError(f"dimension must be 1 or 2, got {n}")
    if int(N) != N or N < 1:
        raise ConfigError(f"N must be a positive integer, got {N}")
    N = int(N)
    b = np.asarray(bounds, dtype=float)
    if n == 1 and b.shape == (2,):
        b = b[None, :]
    if b.shape != (n, 2):
        raise ConfigError(f"bounds {bounds!r} do not describe a {n}-dimensional box")
    if not np.all(np.isfinite(b)) or np.any(b[:, 0] >= b[:, 1]):
        raise ConfigError(f"invalid bounds {bounds!r}")
    spacings = (b[:, 1] - b[:, 0]) / (N + 1)
    if not np.allclose(spacings, spacings[0], rtol=1e-12, atol=0):
        raise ConfigError("2-D boxes must have equal side lengths (uniform spacing)")
    h = float(spacings[0])
    axes = [b[a, 0] + h * np.arange(1, N + 1) for a in range(n)]
    if n == 1:
        coords = axes[0][:, None]
    else:
        X, Y = np.meshgrid(axes[0], axes[1], indexing="ij")
        coords = np.column_stack([X.ravel(), Y.ravel()])
    coords.setflags(write=False)
    return Grid(lo=tuple(b[:, 0]), hi=tuple(b[:, 1]), N=N, n=n, h=h, coords=coords)


def integrate(values: np.ndarray, grid: Grid) -> float:
    """Midpoint-rule integral of nodal values (compensated summation)."""
    return math.fsum(np.asarray(values, dtype=float).tolist()) * grid.cell


def norm_Lm(u: np.ndarray, m: float, grid: Grid) -> float:
    """Discrete L^m norm (sum |u_i|^m h^n)^(1/m)."""
    if not m >= 1:
        raise DomainError(f"L^m norm needs m >= 1, got {m}")
    u = grid.check(u)
    scale = float(np.max(np.abs(u))) if u.size else 0.0
    if scale == 0.0:
        return 0.0
    # factor out the sup so large m cannot underflow or overflow
    return scale * integrate(np.abs(u / scale) ** m, grid) ** (1.0 / m)


def sup_norm(u: np.ndarray) -> float:
    u = np.asarray(u, dtype=float)
    return float(np.max(np.abs(u))) if u.size else 0.0


# --- weight fields -----------------------------------------------------------------

_SYMBOLS = ("x", "y")


def compile_expression(expr, n: int) -> Callable:
    """Turn a closed-form expression string over x (and y) into a numpy callable.

    Callables are passed through unchanged; numbers become constants.
    """
    if callable(expr):
        return expr
    if isinstance(expr, (int, float)):
        value = float(expr)
        return lambda *xs: np.full(np.shape(xs[0]), value)
    import sympy
    from sympy.parsing.sympy_parser import parse_expr

    symbols = sympy.symbols(_SYMBOLS[:n])
    try:
        parsed = parse_expr(str(expr), local_dict={s.name: s for s in symbols} | {"pi": sympy.pi})
    except Exception as exc:  # sympy raises a zoo of exception types
        raise ConfigError(f"cannot parse expression {expr!r}: {exc}") from None
    extra = parsed.free_symbols - set(symbols)
    if extra:
        raise ConfigError(f"expression {expr!r} uses unknown symbols {sorted(map(str, extra))}")
    fn = sympy.lambdify(symbols, parsed, "numpy")
    return lambda *xs: np.broadcast_to(np.asarray(fn(*xs), dtype=float), np.shape(xs[0])).copy()


def evaluate_on_grid(expr, grid: Grid) -> np.ndarray:
    fn = compile_expression(expr, grid.n)
    values = np.asarray(fn(*[grid.coords[:, a] for a in range(grid.n)]), dtype=float)
    return np.broadcast_to(values, (grid.size,)).copy()


@dataclass(frozen=True, eq=False)
class WeightField:
    """Samples of the sign-changing weights a and b with their cached norms."""

    a_values: np.ndarray = field(repr=False)
    b_values: np.ndarray = field(repr=False)
    a_sup_norm: float
    b_sup_norm: float
    a_dual_norm: float
    dual_exponent: float


def sample_weights(a_expr, b_expr, grid: Grid, params: ProblemParams) -> WeightField:
    """Sample a(x), b(x) on the interior nodes and cache their norms.

    The dual norm of a uses the exponent r/(r - delta).
    """
    a = evaluate_on_grid(a_expr, grid)
    b = evaluate_on_grid(b_expr, grid)
    for name, vals in (("a", a), ("b", b)):
        if not np.all(np.isfinite(vals)):
            raise ConfigError(f"weight {name} has non-finite samples on the grid")
    a.setflags(write=False)
    b.setflags(write=False)
    m = params.dual_exponent
    return WeightField(
        a_values=a,
        b_values=b,
        a_sup_norm=sup_norm(a),
        b_sup_norm=sup_norm(b),
        a_dual_norm=norm_Lm(a, m, grid),
        dual_exponent=m,
    )
