"""Scan the cutoff remainder I(R) and its region decomposition over R.

    python scripts/covering_scan.py --s 0.9 --beta 0.15
"""

import argparse

from fraccert import covering, fraclap
from fraccert.fraclap import FracOrder


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--s", type=float, default=0.9)
    ap.add_argument("--beta", type=float, default=0.15)
    ap.add_argument("--R", type=float, nargs="+", default=[4, 8, 16, 32, 64])
    args = ap.parse_args()

    fo = FracOrder(args.s, 1)
    b = args.beta
    u = fraclap.radial_field(lambda r: (1 + r * r) ** (-(b + 1) / 2), 1,
                             decay=fraclap.Decay.POWER, decay_exponent=b + 1, sup_bound=1.0)
    phi = fraclap.power_weight(b)

    rows = []
    print(f"{'R':>6} {'total':>12} " + " ".join(f"{k:>11}" for k in covering.REGIONS))
    for R in args.R:
        res = covering.remainder_integral(u, phi, R, fo)
        rows.append(res)
        print(f"{R:6g} {res.total:12.4e} " + " ".join(f"{v:11.3e}" for v in res.regions.values()))

    print("\nfitted exponents")
    print(f"  total  {covering.decay_rate_fit([(r.R, r.total) for r in rows]):+.3f}")
    for k in covering.REGIONS:
        print(f"  {k:<6} {covering.decay_rate_fit([(r.R, r.regions[k]) for r in rows]):+.3f}")
    print(f"  -2s = {-2 * args.s:+.3f}, 1-2s = {1 - 2 * args.s:+.3f}")
    print(f"I(R_last)/I(R_first) = {rows[-1].total / rows[0].total:.3e}")


if __name__ == "__main__":
    main()
