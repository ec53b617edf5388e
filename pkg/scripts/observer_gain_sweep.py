"""Regulatory ISE/IAE of the tuned PD + observer loop as the observer gain varies.

Also prints the dead-time lower bound kp^2 d^3 / 3 on ISE for a unit load step:
no correction can reach the output before t = 2d, so y ramps freely until then.
"""
import argparse
from dataclasses import replace

import numpy as np

from ipdt.bench import builtin_scenario, run_method


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k-min", type=float, default=0.25)
    ap.add_argument("--k-max", type=float, default=6.0)
    ap.add_argument("--n", type=int, default=24)
    args = ap.parse_args()

    spec = builtin_scenario("regulatory")
    bound = spec.kp ** 2 * spec.d ** 3 / 3
    print(f"ISE lower bound kp^2 d^3 / 3 = {bound:.4f}")
    print(f"{'K':>8} {'ISE':>10} {'IAE':>10} {'energy':>10}")
    best = None
    for k in np.linspace(args.k_min, args.k_max, args.n):
        r = run_method(replace(spec, observer_gain=float(k)), "proposed_pd")
        print(f"{k:8.3f} {r.indices.ise:10.4f} {r.indices.iae:10.4f} {r.indices.energy:10.2f}")
        if best is None or r.indices.ise < best[1]:
            best = (k, r.indices.ise)
    print(f"lowest ISE {best[1]:.4f} at K = {best[0]:.3f}")
    ali = run_method(spec, "ali_majhi").indices
    print(f"ali_majhi reference: ISE {ali.ise:.4f}  IAE {ali.iae:.4f}")


if __name__ == "__main__":
    main()
