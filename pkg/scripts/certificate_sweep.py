"""Print thresholds and verdicts for a small grid of (s, beta) at fixed N, alpha, K."""

import argparse

import numpy as np

from fraccert import certify
from fraccert.fraclap import FracOrder


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=1)
    ap.add_argument("--alpha", type=float, default=0.0)
    ap.add_argument("--K", type=float, default=1.0)
    ap.add_argument("--factor", type=float, default=2.0)
    args = ap.parse_args()

    dens = certify.DensityModel(args.K, args.alpha)
    print(f"{'s':>5} {'beta':>5} {'case':>5} {'lambda_min':>11} {'verdict':>8}")
    for s in (0.25, 0.5, 0.75):
        for beta in np.round(np.linspace(0.25, 2.0, 4), 3):
            sp = certify.ProblemSpec(FracOrder(s, args.N), dens, float(beta), T=1.0)
            case = certify.classify(sp)
            if case is certify.CaseLabel.NONE:
                print(f"{s:5g} {beta:5g} {'-':>5}")
                continue
            th = certify.compute_thresholds(sp)
            # case I has no positive threshold, any lambda > 0 works
            lam = args.factor * th.value if th.value > 0 else 1.0
            rep = certify.verify_parabolic(sp, lam, thresholds=th)
            print(f"{s:5g} {beta:5g} {case.value:>5} {th.value:11.4g} "
                  f"{'pass' if rep.verdict else 'FAIL':>8}")


if __name__ == "__main__":
    main()
