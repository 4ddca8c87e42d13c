"""Ellipse family: S1, S2, the main identity and the finite-difference derivative ratio, as CSV."""
import argparse
import sys

import numpy as np

from grunsky import action as A
from grunsky import welding as W


def fam(t):
    return W.weld(W.EllipseCurve(t)).pair


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--t-values", default="0.05,0.1,0.2,0.3,0.4")
    ap.add_argument("--order", type=int, default=48)
    ap.add_argument("--h", type=float, default=1e-2)
    args = ap.parse_args()
    out = sys.stdout
    out.write("t,s1,s2,residual_main,dS1,dS2,dS2_exact,ratio_residual\n")
    for t in (float(x) for x in args.t_values.split(",")):
        p = fam(t)
        s1 = A.s1(p)
        s2 = A.spectrum_of(p, args.order).s2
        fd = A.family_derivative(fam, t, h=args.h, N=args.order, richardson=False)
        row = (t, s1, s2, abs(s2 + s1 / (12 * np.pi)), fd.dS1, fd.dS2, A.ellipse_ds2_exact(t), fd.ratio_residual)
        out.write(",".join(f"{v:.12g}" for v in row) + "\n")


if __name__ == "__main__":
    main()
