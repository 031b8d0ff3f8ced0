"""Compare quadrature, spectral and closed-form (-Delta)^s of a Gaussian in 1D."""

import argparse
import math

import numpy as np
from scipy.special import hyp1f1

from fraccert import fraclap
from fraccert.fraclap import FracOrder


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--s", type=float, nargs="+", default=[0.25, 0.5, 0.75])
    ap.add_argument("--L", type=float, default=3276.8)
    ap.add_argument("--M", type=int, default=65536)
    args = ap.parse_args()

    g = fraclap.gaussian(1)
    for s in args.s:
        fo = FracOrder(s, 1)
        grid, spec = fraclap.flap_spectral_field(g, fo, args.L, args.M)
        idx = np.nonzero(np.abs(grid.axis) <= 5 + 1e-9)[0][::5]
        xs = grid.axis[idx]
        pv = np.array([fraclap.flap_pv(g, [x], fo, tol=1e-10).value for x in xs])
        ex = 4**s * math.gamma(0.5 + s) / math.sqrt(math.pi) * hyp1f1(0.5 + s, 0.5, -xs**2)
        scale = np.max(np.abs(ex))
        print(f"s = {s}")
        print(f"  pv - exact       {np.max(np.abs(pv - ex)) / scale:.2e}")
        print(f"  spectral - exact {np.max(np.abs(spec[idx] - ex)) / scale:.2e}")
        print(f"  pv - spectral    {np.max(np.abs(pv - spec[idx])) / scale:.2e}")


if __name__ == "__main__":
    main()
