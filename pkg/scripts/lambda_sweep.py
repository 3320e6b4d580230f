"""Sweep lambda over fractions of lambda_0 and tabulate both solution energies.

    python3 scripts/lambda_sweep.py --config configs/default.json --fractions 0.1,0.3,0.5,0.7,0.9
"""

import argparse
import warnings

from fracpq import solver as S
from fracpq.problem import Problem, load_config


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default="configs/default.json")
    ap.add_argument("--fractions", default="0.1,0.3,0.5,0.7,0.9,1.1")
    ap.add_argument("--out", default="sweep.csv")
    args = ap.parse_args()
    cfg = load_config(args.config)
    prob = Problem.from_config(cfg)
    th = S.Thresholds.compute(prob, 1.0, cfg.seed)
    lams = [float(f) * th.lambda_0 for f in args.fractions.split(",")]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rows = S.sweep_lambda(lams, prob, S.SolverOptions.from_dict(cfg.solver, seed=cfg.seed), th,
                              out_csv=args.out)
    print(f"lambda_0 = {th.lambda_0:.6g}")
    print(f"{'lambda/lambda_0':>16} {'theta_plus':>14} {'theta_minus':>14}  error")
    for lam, row in zip(lams, rows):
        print(f"{lam / th.lambda_0:16.3f} {row['theta_plus']:14.6g} {row['theta_minus']:14.6g}  {row['error']}")


if __name__ == "__main__":
    main()
