"""Discrete Gagliardo seminorms, the forms A_e, nonlocal tails and Harnack pairs.

With the piecewise-constant function model and midpoint quadrature the
seminorm of order s and exponent e of a grid function u reads

    sum_{i != j} w_ij |u_i - u_j|^e + 2 sum_i c_i |u_i|^e h^n,

where w_ij = h^{2n} / |x_i - x_j|^{n + e s} and c_i is the kernel integrated
over the complement of the domain.  The exterior term accounts for the zero
extension of u outside the domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as sp_integrate

from .core_grid import Grid
from .errors import DomainError, GeometryError, GridMismatchError, PreconditionError


def odd_power(d: np.ndarray, e: float) -> np.ndarray:
    """|d|^(e-2) d, extended by 0 at d = 0."""
    d = np.asarray(d, dtype=float)
    return np.sign(d) * np.abs(d) ** (e - 1.0)


def exterior_coefficients_1d(x: np.ndarray, lo: float, hi: float, es: float) -> np.ndarray:
    """Closed form of the kernel |x - y|^-(1 + es) integrated over y outside (lo, hi)."""
    return ((x - lo) ** (-es) + (hi - x) ** (-es)) / es


def _exit_distance(px, py, lo, hi, theta):
    """Distance from (px, py) to the boundary of the box along direction theta."""
    c, s = math.cos(theta), math.sin(theta)
    dist = math.inf
    if c > 0:
        dist = min(dist, (hi[0] - px) / c)
    elif c < 0:
        dist = min(dist, (lo[0] - px) / c)
    if s > 0:
        dist = min(dist, (hi[1] - py) / s)
    elif s < 0:
        dist = min(dist, (lo[1] - py) / s)
    return dist


def exterior_coefficient_2d(point, lo, hi, es: float) -> float:
    """Kernel |x - y|^-(2 + es) integrated over y outside a rectangle.

    In polar coordinates around the point the radial integral is explicit,
    leaving (1/es) times the angular integral of d(theta)^(-es), with d the
    exit distance.  The integrand has kinks at the four corner directions, so
    the angular quadrature is split there.
    """
    px, py = float(point[0]), float(point[1])
    corners = [(lo[0], lo[1]), (hi[0], lo[1]), (hi[0], hi[1]), (lo[0], hi[1])]
    angles = sorted(math.atan2(cy - py, cx - px) % (2 * math.pi) for cx, cy in corners)
    knots = [0.0, *angles, 2 * math.pi]
    total = 0.0
    for a, b in zip(knots[:-1], knots[1:]):
        if b - a <= 0:
            continue
        val, _ = sp_integrate.quad(
            lambda t: _exit_distance(px, py, lo, hi, t) ** (-es), a, b, epsabs=0, epsrel=1e-13, limit=200
        )
        total += val
    return total / es


@dataclass(frozen=True, eq=False)
class KernelTable:
    """Pair weights and exterior coefficients for one (s, e) pair on one grid.

    ``W`` is the dense symmetric weight matrix with zero diagonal; ``c`` holds
    the exterior coefficients (without the h^n cell factor).
    """

    grid: Grid = field(repr=False)
    s: float
    e: float
    W: np.ndarray = field(repr=False)
    c: np.ndarray = field(repr=False)
    iu: tuple = field(repr=False)

    @property
    def es(self) -> float:
        return self.e * self.s

    def check(self, u) -> np.ndarray:
        return self.grid.check(u)


def build_kernel(grid: Grid, s: float, e: float) -> KernelTable:
    """Precompute the kernel table of order ``s`` and exponent ``e``.

    The pairwise cost is O(N^(2n)); for n = 2 keep N around 16.
    """
    if not 0 < s < 1 or not e > 1:
        raise DomainError(f"kernel needs 0 < s < 1 and e > 1, got s={s}, e={e}")
    n = grid.n
    es = e * s
    X = grid.coords
    diff = X[:, None, :] - X[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=-1))
    np.fill_diagonal(dist, 1.0)
    W = grid.h ** (2 * n) / dist ** (n + es)
    np.fill_diagonal(W, 0.0)
    if n == 1:
        c = exterior_coefficients_1d(X[:, 0], grid.lo[0], grid.hi[0], es)
    else:
        c = np.array([exterior_coefficient_2d(x, grid.lo, grid.hi, es) for x in X])
    W.setflags(write=False)
    c.setflags(write=False)
    iu = np.triu_indices(grid.size, k=1)
    return KernelTable(grid=grid, s=float(s), e=float(e), W=W, c=c, iu=iu)


def _form_terms(u: np.ndarray, v: np.ndarray, kt: KernelTable) -> np.ndarray:
    i, j = kt.iu
    pair = 2.0 * kt.W[i, j] * odd_power(u[i] - u[j], kt.e) * (v[i] - v[j])
    ext = 2.0 * kt.c * kt.grid.cell * odd_power(u, kt.e) * v
    return np.concatenate([pair, ext])


def form_A(u: np.ndarray, v: np.ndarray, kt: KernelTable) -> float:
    """Discrete A_e(u, v): pairs i < j in lexicographic order doubled, then exterior terms."""
    u = kt.check(u)
    v = kt.check(v)
    return math.fsum(_form_terms(u, v, kt).tolist())


def seminorm(u: np.ndarray, kt: KernelTable) -> float:
    """e-th power of the discrete Gagliardo seminorm (identical to form_A(u, u))."""
    return form_A(u, u, kt)


def operator_apply(u: np.ndarray, kt: KernelTable) -> np.ndarray:
    """Vector of A_e(u, e_k) over the nodal indicator basis e_k."""
    u = kt.check(u)
    phi = odd_power(u[:, None] - u[None, :], kt.e)
    return 2.0 * np.sum(kt.W * phi, axis=1) + 2.0 * kt.c * kt.grid.cell * odd_power(u, kt.e)


def _distances(grid: Grid, x0) -> np.ndarray:
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0.shape != (grid.n,):
        raise GridMismatchError(f"point {x0} does not live in dimension {grid.n}")
    return np.sqrt(np.sum((grid.coords - x0) ** 2, axis=1))


def tail_T(u: np.ndarray, x0, R: float, kt: KernelTable) -> float:
    """Nonlocal tail (R^{es} sum_{|x_i - x0| > R} |u_i|^{e-1} |x_i - x0|^{-(n+es)} h^n)^{1/(e-1)}."""
    if not R > 0:
        raise DomainError(f"tail radius must be positive, got {R}")
    u = kt.check(u)
    grid = kt.grid
    d = _distances(grid, x0)
    far = d > R
    if not np.any(far):
        return 0.0
    terms = np.abs(u[far]) ** (kt.e - 1) * d[far] ** (-(grid.n + kt.es))
    inner = R ** kt.es * math.fsum(terms.tolist()) * grid.cell
    return inner ** (1.0 / (kt.e - 1))


def harnack_ratio(u: np.ndarray, x0, R: float, q: float, grid: Grid, tail_kernel: KernelTable | None = None):
    """Weak-Harnack diagnostic pair (lhs, rhs) and a report dict.

    lhs is the minimum of u over nodes in B_{R/4}(x0); rhs is the (q-1)-mean
    of u over nodes in the annulus B_R \\ B_{R/2}.  When ``tail_kernel`` is
    given the tail of the negative part u^- is appended to the report.
    """
    if not R > 0:
        raise DomainError(f"radius must be positive, got {R}")
    u = grid.check(u)
    d = _distances(grid, x0)
    inner = d < R / 4
    annulus = (d >= R / 2) & (d < R)
    if not np.any(inner) or not np.any(annulus):
        raise GeometryError(f"ball of radius {R} around {x0} leaves an empty sub-ball or annulus")
    if np.any(u[d < R] < 0):
        raise PreconditionError("u must be nonnegative on B_R for the Harnack diagnostic")
    lhs = float(np.min(u[inner]))
    rhs = float(np.mean(u[annulus] ** (q - 1)) ** (1.0 / (q - 1)))
    report = {"lhs": lhs, "rhs": rhs, "inner_nodes": int(inner.sum()), "annulus_nodes": int(annulus.sum())}
    if tail_kernel is not None:
        report["tail_negative_part"] = tail_T(np.maximum(-u, 0.0), x0, R, tail_kernel)
    return lhs, rhs, report
