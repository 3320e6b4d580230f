"""Configuration loading and the assembled discrete problem."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .core_grid import Grid, ProblemParams, WeightField, build_grid, critical_exponent, sample_weights
from .errors import ConfigError
from .gagliardo import KernelTable, build_kernel

REQUIRED_KEYS = ("n", "bounds", "N", "s1", "s2", "p", "q", "delta", "r", "a", "b")
OPTIONAL_KEYS = ("lambda", "beta", "seed", "solver", "regularity", "cutoff", "name")


@dataclass(frozen=True)
class ProblemConfig:
    """Parsed JSON configuration (all scalar data plus weight expressions)."""

    params: ProblemParams
    bounds: object
    N: int
    a: object
    b: object
    seed: int = 0
    solver: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"N": self.N, "bounds": self.bounds, "a": self.a, "b": self.b, "seed": self.seed}
        out.update(self.params.to_dict())
        if self.solver:
            out["solver"] = dict(self.solver)
        out.update(self.extra)
        return out


def parse_config(doc: dict) -> ProblemConfig:
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    missing = [k for k in REQUIRED_KEYS if k not in doc]
    if missing:
        raise ConfigError(f"configuration is missing keys {missing}")
    unknown = sorted(set(doc) - set(REQUIRED_KEYS) - set(OPTIONAL_KEYS))
    if unknown:
        raise ConfigError(f"configuration has unknown keys {unknown}")
    try:
        n = int(doc["n"])
        s1, s2, p = float(doc["s1"]), float(doc["s2"]), float(doc["p"])
        r = doc["r"]
        r = critical_exponent(n, p, s1) if r == "critical" else float(r)
        params = ProblemParams(
            n=n, s1=s1, s2=s2, p=p, q=float(doc["q"]), delta=float(doc["delta"]), r=r,
            lam=float(doc.get("lambda", 0.0)), beta=float(doc.get("beta", 1.0)),
        )
        seed = int(doc.get("seed", 0))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad scalar in configuration: {exc}") from None
    solver = doc.get("solver", {})
    if not isinstance(solver, dict):
        raise ConfigError("'solver' must be an object")
    extra = {k: doc[k] for k in ("regularity", "cutoff", "name") if k in doc}
    return ProblemConfig(
        params=params, bounds=doc["bounds"], N=doc["N"], a=doc["a"], b=doc["b"],
        seed=seed, solver=solver, extra=extra,
    )


def load_config(path) -> ProblemConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc.msg} at line {exc.lineno}") from None
    return parse_config(doc)


@dataclass(frozen=True, eq=False)
class Problem:
    """Everything needed to evaluate the discrete functionals."""

    params: ProblemParams
    grid: Grid
    fields: WeightField
    kp: KernelTable
    kq: KernelTable
    a_expr: object = None
    b_expr: object = None

    @classmethod
    def build(cls, params: ProblemParams, bounds, N: int, a, b) -> "Problem":
        grid = build_grid(bounds, N, params.n)
        fields = sample_weights(a, b, grid, params)
        kp = build_kernel(grid, params.s1, params.p)
        kq = build_kernel(grid, params.s2, params.q)
        return cls(params, grid, fields, kp, kq, a, b)

    @classmethod
    def from_config(cls, cfg: ProblemConfig) -> "Problem":
        return cls.build(cfg.params, cfg.bounds, cfg.N, cfg.a, cfg.b)

    def with_params(self, **changes) -> "Problem":
        """Same grid and kernels with changed scalars (lam, beta only keep kernels valid)."""
        params = self.params.with_(**changes)
        kernel_keys = {"n", "s1", "s2", "p", "q"}
        if kernel_keys & set(changes) or "delta" in changes or "r" in changes:
            fields = sample_weights(self.a_expr, self.b_expr, self.grid, params)
            kp = build_kernel(self.grid, params.s1, params.p)
            kq = build_kernel(self.grid, params.s2, params.q)
            return Problem(params, self.grid, fields, kp, kq, self.a_expr, self.b_expr)
        return Problem(params, self.grid, self.fields, self.kp, self.kq, self.a_expr, self.b_expr)

    def with_weights(self, a, b) -> "Problem":
        fields = sample_weights(a, b, self.grid, self.params)
        return Problem(self.params, self.grid, fields, self.kp, self.kq, a, b)
