"""Command-line entry point: ``fracpq <subcommand> --config CONFIG [flags]``.

Exit codes: 0 success, 2 configuration error, 3 non-convergence, 4 precondition
or threshold refusal.  Errors are printed to standard error as one JSON line.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import platform
import re
import sys
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import constants as K
from . import fibering as F
from . import regularity as R
from . import solver as S
from .core_grid import evaluate_on_grid
from .errors import ConfigError, FracPQError, ThresholdError
from .problem import Problem, ProblemConfig, load_config

_LAMBDA_RE = re.compile(r"^\s*(?:([-+0-9.eE]+)\s*\*\s*)?lambda0\s*$")


# --- manifest ----------------------------------------------------------------------------

def _timestamp() -> str:
    """UTC time, pinned by SOURCE_DATE_EPOCH when set (reproducible outputs)."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = int(epoch) if epoch is not None and epoch.strip().isdigit() else int(time.time())
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int
    versions: dict = field(default_factory=lambda: {
        "fracpq": __version__, "numpy": np.__version__, "python": platform.python_version(),
        "scipy": __import__("scipy").__version__, "sympy": __import__("sympy").__version__,
    })
    started: str = field(default_factory=_timestamp)
    outputs: list = field(default_factory=list)
    arguments: dict = field(default_factory=dict)

    def write(self, out_dir: Path) -> Path:
        path = out_dir / "manifest.json"
        self.outputs.append(path.name)
        _write_json(path, self.__dict__)
        return path


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(_plain(doc), indent=2, allow_nan=True) + "\n")


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(["%.17g" % v if isinstance(v, (float, np.floating)) else v for v in row])


def _emit(doc) -> None:
    sys.stdout.write(json.dumps(_plain(doc), indent=2) + "\n")


# --- shared helpers ------------------------------------------------------------------------

@dataclass
class _Context:
    cfg: ProblemConfig
    prob: Problem
    opts: S.SolverOptions
    _thresholds: S.Thresholds | None = None

    def thresholds(self, lam: float) -> S.Thresholds:
        if self._thresholds is None:
            self._thresholds = S.Thresholds.compute(self.prob, lam, self.cfg.seed)
        return self._thresholds.for_lambda(self.prob, lam)


def _context(args) -> _Context:
    cfg = load_config(args.config)
    prob = Problem.from_config(cfg)
    opts = S.SolverOptions.from_dict(cfg.solver, seed=cfg.seed)
    return _Context(cfg, prob, opts)


def parse_lambda(text, ctx: _Context) -> float:
    """A number, 'lambda0' or 'c*lambda0'; None means the config value."""
    if text is None:
        return ctx.cfg.params.lam
    m = _LAMBDA_RE.match(str(text))
    if m:
        factor = float(m.group(1)) if m.group(1) else 1.0
        return factor * ctx.thresholds(1.0).lambda_0
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"cannot read lambda value {text!r}") from None


def _out_dir(args) -> Path | None:
    if getattr(args, "out", None) is None:
        return None
    path = Path(args.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _x_column(grid):
    return grid.coords if grid.n == 2 else grid.coords[:, :1]


def _write_solution(out: Path, rec: S.SolutionRecord, prob: Problem, stem: str, manifest: RunManifest) -> None:
    _write_json(out / f"{stem}.json", rec.to_dict(prob.grid))
    header = ["x", "u"] if prob.grid.n == 1 else ["x", "y", "u"]
    rows = [list(x) + [u] for x, u in zip(_x_column(prob.grid).tolist(), rec.u.tolist())]
    _write_csv(out / f"{stem}.csv", header, rows)
    manifest.outputs += [f"{stem}.json", f"{stem}.csv"]


# --- subcommands -------------------------------------------------------------------------------

def cmd_constants(args) -> int:
    ctx = _context(args)
    lam = parse_lambda(args.lam, ctx)
    th = ctx.thresholds(lam)
    rep = K.compute_constants(ctx.prob, lam, ctx.cfg.seed, kappa=args.kappa, alpha=args.alpha,
                              S_pair=(th.S_r, th.S_crit))
    doc = rep.to_dict()
    _emit(doc)
    out = _out_dir(args)
    if out is not None:
        manifest = RunManifest("constants", ctx.cfg.to_dict(), ctx.cfg.seed, arguments=vars_of(args))
        _write_json(out / "constants.json", doc)
        manifest.outputs.append("constants.json")
        manifest.write(out)
    return 0


def cmd_fibering(args) -> int:
    ctx = _context(args)
    lam = parse_lambda(args.lam, ctx)
    grid = ctx.prob.grid
    if args.u is not None:
        u = evaluate_on_grid(args.u, grid)
    else:
        # the first sine mode of the box
        z = (grid.coords - np.asarray(grid.lo)) / np.subtract(grid.hi, grid.lo)
        u = np.prod(np.sin(np.pi * z), axis=1)
    prof = F.classify(u, ctx.prob, lam)
    doc = prof.to_dict()
    _emit(doc)
    out = _out_dir(args)
    if out is not None:
        manifest = RunManifest("fibering", ctx.cfg.to_dict(), ctx.cfg.seed, arguments=vars_of(args))
        _write_json(out / "fibering.json", doc)
        _write_csv(out / "fibering.csv", ["t", "psi", "dpsi", "d2psi"], F.profile_table(prof).tolist())
        manifest.outputs += ["fibering.json", "fibering.csv"]
        manifest.write(out)
    return 0


def cmd_solve(args) -> int:
    ctx = _context(args)
    lam = parse_lambda(args.lam, ctx)
    prob = ctx.prob.with_params(lam=lam)
    out = _out_dir(args)
    manifest = RunManifest("solve", ctx.cfg.to_dict(), ctx.opts.seed, arguments=vars_of(args))
    records = {}
    if args.branch == "mp":
        rep = K.compute_constants(prob, lam, ctx.cfg.seed)
        if rep.lambda_star is not None and not lam < rep.lambda_star and args.strict:
            raise ThresholdError(f"lambda = {lam} is not below lambda_* = {rep.lambda_star}", report=rep.to_dict())
        records["mp"] = S.solve_mountain_pass_deltaq(lam, prob, ctx.opts, eta=rep.eta_mp, c_inf=rep.c_infty)
    else:
        th = ctx.thresholds(lam)
        if args.strict and not 0 < lam < th.lambda_0:
            raise ThresholdError(f"lambda = {lam} lies outside (0, lambda_0 = {th.lambda_0})",
                                 report={"lambda": lam, **th.to_dict()})
        if prob.params.critical and (th.c_infty is None or th.c_infty <= 0):
            raise ThresholdError(f"c_infty = {th.c_infty} is not positive at lambda = {lam}",
                                 report={"lambda": lam, **th.to_dict()})
        if args.branch == "both":
            records["nplus"], records["nminus"] = S.two_solutions(lam, prob, ctx.opts, th, strict=args.strict)
        elif args.branch == "nplus":
            records["nplus"] = S.solve_Nplus(lam, prob, ctx.opts, S_r=th.S_r)
        else:
            records["nminus"] = S.solve_Nminus(lam, prob, ctx.opts, c_inf=th.c_infty)
    summary = {k: {kk: vv for kk, vv in rec.to_dict().items() if kk != "u"} for k, rec in records.items()}
    _emit(summary)
    if out is not None:
        for k, rec in records.items():
            _write_solution(out, rec, prob, f"solution_{k}", manifest)
        manifest.write(out)
    return 0


def cmd_sweep(args) -> int:
    ctx = _context(args)
    lams = [parse_lambda(item, ctx) for item in args.lambdas.split(",") if item.strip()] if args.lambdas else []
    out = _out_dir(args)
    th = ctx.thresholds(lams[0]) if lams else None
    csv_path = out / "sweep.csv" if out is not None else None
    rows = S.sweep_lambda(lams, ctx.prob, ctx.opts, th, out_csv=csv_path)
    _emit({"rows": rows})
    if out is not None:
        manifest = RunManifest("sweep", ctx.cfg.to_dict(), ctx.opts.seed, arguments=vars_of(args))
        manifest.outputs.append("sweep.csv")
        manifest.write(out)
    return 0


def _parse_floats(text):
    if text is None:
        return None
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"cannot read number list {text!r}") from None


def cmd_regularity(args) -> int:
    ctx = _context(args)
    try:
        doc = json.loads(Path(args.input).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read solution file {args.input}: {exc}") from None
    if "u" not in doc:
        raise ConfigError("solution file has no 'u' array")
    u = np.asarray(doc["u"], dtype=float)
    grid = ctx.prob.grid
    x0 = _parse_floats(args.x0) or list(grid.coords[0])
    radii = _parse_floats(args.radii)
    if radii is None:
        radii = R.dyadic_radii(grid, x0)
    rep = R.holder_exponent(u, x0, radii, ctx.prob)
    result = {"holder": rep.to_dict()}
    if not ctx.prob.params.critical:
        result["degiorgi"] = R.degiorgi_verify(u, ctx.prob, args.levels).to_dict()
    _emit(result)
    out = _out_dir(args)
    if out is not None:
        manifest = RunManifest("regularity", ctx.cfg.to_dict(), ctx.cfg.seed, arguments=vars_of(args))
        _write_json(out / "regularity.json", result)
        _write_csv(out / "oscillation.csv", ["radius", "oscillation"], rep.osc_table)
        manifest.outputs += ["regularity.json", "oscillation.csv"]
        manifest.write(out)
    return 0


def cmd_critical_probe(args) -> int:
    ctx = _context(args)
    lam = parse_lambda(args.lam, ctx)
    res = R.critical_probe(lam, ctx.prob, args.kappa, args.alpha, args.theta)
    doc = res.to_dict()
    _emit(doc)
    out = _out_dir(args)
    if out is not None:
        manifest = RunManifest("critical-probe", ctx.cfg.to_dict(), ctx.cfg.seed, arguments=vars_of(args))
        _write_json(out / "critical_probe.json", doc)
        manifest.outputs.append("critical_probe.json")
        manifest.write(out)
    return 0


def vars_of(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func", "out")}


# --- parser --------------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fracpq", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"fracpq {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_lambda=True):
        p.add_argument("--config", required=True, help="problem configuration JSON")
        p.add_argument("--out", help="directory for JSON/CSV outputs and the run manifest")
        if with_lambda:
            p.add_argument("--lambda", dest="lam", help="lambda value: a number, 'lambda0' or 'c*lambda0'")

    p = sub.add_parser("constants", help="print every explicit constant as JSON")
    common(p)
    p.add_argument("--kappa", type=float, help="cutoff radius for the critical scalings")
    p.add_argument("--alpha", type=float, help="exponent in beta = eps^alpha")
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("fibering", help="classify the fibering map of one grid function")
    common(p)
    p.add_argument("--u", help="expression in x (and y) for the grid function; default first sine mode")
    p.set_defaults(func=cmd_fibering)

    p = sub.add_parser("solve", help="compute Nehari or mountain-pass solutions")
    common(p)
    p.add_argument("--branch", choices=("nplus", "nminus", "mp", "both"), default="both")
    p.add_argument("--strict", action="store_true", help="refuse lambda outside (0, lambda_0) with exit 4")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="run the two-solution solver over a list of lambda values")
    common(p, with_lambda=False)
    p.add_argument("--lambdas", default="", help="comma list, entries as for --lambda")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("regularity", help="De Giorgi and oscillation diagnostics of a stored solution")
    common(p, with_lambda=False)
    p.add_argument("--input", required=True, help="solution JSON written by 'solve --out'")
    p.add_argument("--x0", help="comma-separated centre; default the first grid node")
    p.add_argument("--radii", help="comma-separated radii; default dyadic")
    p.add_argument("--levels", type=int, default=20, help="number of De Giorgi truncation levels")
    p.set_defaults(func=cmd_regularity)

    p = sub.add_parser("critical-probe", help="compare sup_t J(t u_eps) with c_infty")
    common(p)
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--theta", type=float, default=2.0)
    p.set_defaults(func=cmd_critical_probe)
    return parser


def _error_line(exc: FracPQError) -> str:
    doc = {"error": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code}
    report = getattr(exc, "report", None)
    if report:
        doc["report"] = _plain(report)
    return json.dumps(doc)


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except FracPQError as exc:
        sys.stderr.write(_error_line(exc) + "\n")
        return exc.exit_code


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
