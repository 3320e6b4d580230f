"""Calibrate the oscillation-decay exponent fit on |x - x0|^gamma.

    python3 scripts/holder_calibration.py --N 256 --gammas 0.2,0.3,0.5,0.7,0.9
"""

import argparse

import numpy as np

from fracpq import regularity as R
from fracpq.core_grid import ProblemParams
from fracpq.problem import Problem


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=256)
    ap.add_argument("--gammas", default="0.2,0.3,0.5,0.7,0.9")
    args = ap.parse_args()
    prm = ProblemParams(n=1, s1=0.3, s2=0.2, p=2.0, q=1.8, delta=1.5, r=3.0, lam=0.0, beta=0.0)
    prob = Problem.build(prm, (-1, 1), args.N, "1", "1")
    x = prob.grid.coords[:, 0]
    x0 = [x[args.N // 2]]
    radii = R.dyadic_radii(prob.grid, x0)
    print(f"x0 = {x0[0]:.6f}, {len(radii)} radii from {radii[0]:.4g} to {radii[-1]:.4g}")
    print(f"{'gamma':>6} {'fit':>8} {'error':>8}")
    for gamma in (float(v) for v in args.gammas.split(",")):
        fit = R.holder_exponent(np.abs(x - x0[0]) ** gamma, x0, radii, prob).alpha_fit
        print(f"{gamma:6.2f} {fit:8.4f} {fit - gamma:8.4f}")


if __name__ == "__main__":
    main()
