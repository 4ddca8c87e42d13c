"""Distance between the period-matrix B1 and the series B1 as the welding sample count M grows."""
import argparse

import numpy as np

from grunsky import faber as F
from grunsky import operators as O
from grunsky import welding as W


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--curve", default="ellipse-0.5")
    ap.add_argument("--order", type=int, default=32)
    ap.add_argument("--m-values", default="1024,2048,4096,8192,16384")
    args = ap.parse_args()
    curve = W.catalog()[args.curve]
    print(f"{'M':>7} {'alias':>10} {'inner':>6} {'|dB1|_F':>10} {'AA*-BB*-I':>10} {'ABt-BAt':>10}")
    for M in (int(x) for x in args.m_values.split(",")):
        r = W.weld(curve, M=M)
        bl, km, _ = W.kyns_blocks(r.gamma, args.order, check_alias=False)
        series = O.blocks_from_table(F.grunsky_table(r.pair, args.order))
        sym = W.symplectic_residuals(km, args.order)
        print(f"{M:7d} {km.alias_energy:10.2e} {km.inner:6d} {np.linalg.norm(bl.B1 - series.B1):10.2e} "
              f"{sym['AAstar_minus_BBstar']:10.2e} {sym['ABt_minus_BAt']:10.2e}")


if __name__ == "__main__":
    main()
