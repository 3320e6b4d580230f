"""Seminorm excess and mass deficit of the truncated bubble as eps halves.

    python3 scripts/cutoff_trends.py --config configs/critical.json --N 1024 --kappa 0.4
"""

import argparse

from fracpq import constants as K
from fracpq import regularity as R
from fracpq.problem import Problem, load_config


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default="configs/critical.json")
    ap.add_argument("--N", type=int, default=1024)
    ap.add_argument("--kappa", type=float, default=0.4)
    ap.add_argument("--theta", type=float, default=2.0)
    ap.add_argument("--eps", default="0.1,0.05,0.025,0.0125")
    args = ap.parse_args()
    cfg = load_config(args.config)
    coarse = Problem.from_config(cfg)
    S_crit = K.estimate_S(coarse.params.p_star, coarse, seed=cfg.seed).value
    prob = Problem.build(cfg.params, cfg.bounds, args.N, cfg.a, cfg.b)
    eps = [float(v) for v in args.eps.split(",")]
    tab = R.lemm1_trends(args.kappa, eps, prob, args.theta, S_crit=S_crit)
    print(f"level S^(n/(p s1)) = {tab.level:.6g} (S estimated at N={coarse.grid.size}), c1 = {tab.c1:.6g}")
    print(f"{'eps':>10} {'seminorm':>12} {'mass':>12} {'excess':>12} {'deficit':>12}")
    for e, _, P, M, ex, de in tab.rows:
        print(f"{e:10.5g} {P:12.6g} {M:12.6g} {ex:12.6g} {de:12.6g}")
    print(f"excess decreasing: {tab.excess_decreasing}; fitted slope {tab.excess_slope}, "
          f"continuum exponent {tab.excess_exponent:.4g}")


if __name__ == "__main__":
    main()
