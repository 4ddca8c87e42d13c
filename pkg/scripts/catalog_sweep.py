"""Weld every catalog curve and print the headline quantities and residuals."""
import argparse
import time

import numpy as np

from grunsky import action as A
from grunsky import welding as W


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--order", type=int, default=48)
    ap.add_argument("--samples", type=int, default=4096)
    args = ap.parse_args()
    cols = ("s1", "s2", "residual_main", "residual_s1_symmetry", "residual_surgery", "residual_vk")
    print("curve".ljust(12) + "".join(c.rjust(22) for c in cols) + "seconds".rjust(10))
    for name, curve in W.catalog().items():
        t0 = time.perf_counter()
        p = W.weld(curve, N=max(64, args.order), M=args.samples).pair
        rep = A.action_report(p, args.order).to_json()
        row = "".join(f"{rep[c]:22.12g}" for c in cols)
        print(name.ljust(12) + row + f"{time.perf_counter() - t0:10.2f}")
    print(f"closed form S2(ellipse 0.5) = {A.ellipse_s2_exact(0.5):.15g}, 1/(12 pi) = {1 / (12 * np.pi):.6g}")


if __name__ == "__main__":
    main()
