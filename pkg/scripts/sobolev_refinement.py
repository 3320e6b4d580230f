"""Discrete Sobolev constant estimate S_r under grid refinement.

    python3 scripts/sobolev_refinement.py --config configs/default.json --sizes 8,16,32,64
"""

import argparse

from fracpq import constants as K
from fracpq.problem import Problem, load_config


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default="configs/default.json")
    ap.add_argument("--sizes", default="8,16,32,64")
    ap.add_argument("--m", type=float, help="Lebesgue exponent (default: r of the config)")
    args = ap.parse_args()
    cfg = load_config(args.config)
    m = args.m or cfg.params.r
    prev = None
    print(f"{'N':>6} {'S':>12} {'ratio':>8}")
    for N in (int(v) for v in args.sizes.split(",")):
        prob = Problem.build(cfg.params, cfg.bounds, N, cfg.a, cfg.b)
        value = K.estimate_S(m, prob, seed=cfg.seed).value
        ratio = "" if prev is None else f"{value / prev:8.4f}"
        print(f"{N:6d} {value:12.6f} {ratio}")
        prev = value


if __name__ == "__main__":
    main()
