"""Square-block gap |det(I - B1 B1*) - det(I - B4 B4*)| under N-doubling, per catalog curve."""
import argparse

from grunsky import operators as O
from grunsky import welding as W


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-order", type=int, default=128)
    ap.add_argument("--curves", default="ellipse-0.1,ellipse-0.3,ellipse-0.5,cos2-0.1,cos3-0.1")
    args = ap.parse_args()
    cat = W.catalog()
    for name in args.curves.split(","):
        p = W.weld(cat[name]).pair
        out = O.det_route_gap(p, N=16, tol=0.0, max_N=args.max_order)
        hist = "  ".join(f"N={n}: {g:.2e}" for n, g in out["history"])
        print(f"{name:12s} {hist}")


if __name__ == "__main__":
    main()
