"""Command line front end: welding, tables, spectra, actions and verification suites.

Exit codes: 0 pass, 1 verification failure, 2 solver failure, 3 spectral
precondition failure, 64 usage error.  JSON goes to stdout unless --out is
given; floats are written with 17 significant digits in a fixed key order so
identical runs give identical bytes.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import action as A
from . import faber as F
from . import operators as O
from . import welding as W
from .errors import GrunskyError, NormAtLeastOne, SolverError
from .pair import NormalizedPair, invert_model, pair_from_json, pair_to_json
from .series import TaylorSeries

log = logging.getLogger("grunsky")

EXIT_OK, EXIT_FAIL, EXIT_SOLVER, EXIT_SPECTRAL, EXIT_USAGE = 0, 1, 2, 3, 64

# default tolerances of the verification battery; each one is a flag
TOLERANCES = {
    "unitarity": 1e-6,
    "takagi": 1e-10,
    "schur": 1e-6,
    "det": 1e-8,
    "period": 1e-8,
    "vk": 1e-6,
    "reflection": 1e-6,
    "brazilevic": 0.0,
    "hirota": 1e-6,
    "main": 1e-5,
    "s1_symmetry": 1e-6,
    "s2_symmetry": 1e-8,
    "surgery": 1e-5,
    "family_ratio": 1e-4,
    "family_closed_form": 1e-6,
    "kyns": 1e-6,
    "self_residual": 1e-8,
}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- deterministic JSON

def _plain(x):
    """Turn numpy scalars, arrays and complex numbers into JSON-ready Python objects."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [float(np.real(x)), float(np.imag(x))]
    if isinstance(x, (np.floating, float)):
        return float(x)
    return x


def _fmt_float(v: float) -> str:
    if math.isnan(v):
        return '"nan"'
    if math.isinf(v):
        return '"inf"' if v > 0 else '"-inf"'
    s = f"{v:.17g}"
    if all(c in "-0123456789" for c in s):
        s += ".0"
    return s


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with 17 significant digits for every float and insertion-ordered keys."""
    obj = _plain(obj) if _level == 0 else obj
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, float):
        return _fmt_float(obj)
    return json.dumps(obj)


def _emit(args, payload, name: str = "out.json", text: str | None = None):
    body = text if text is not None else dumps(payload) + "\n"
    if args.out:
        out = Path(args.out)
        if out.suffix == "":
            out.mkdir(parents=True, exist_ok=True)
            out = out / name
        else:
            out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(body)
    else:
        sys.stdout.write(body)


# ---------------------------------------------------------------- inputs

def resolve_curve(args):
    if getattr(args, "curve", None):
        d = json.loads(Path(args.curve).read_text())
        if "ellipse" in d:
            return W.EllipseCurve(float(d["ellipse"]), name=d.get("name", "ellipse"))
        return W.CurveSpec.from_json(d)
    name = getattr(args, "catalog", None) or "circle"
    cat = W.catalog()
    if name == "ellipse":
        t = 0.5 if args.t is None else args.t
        return W.EllipseCurve(t, name=f"ellipse-{t:g}")
    if name == "perturbed":
        alpha = [0.0] * (args.k - 1) + [args.eps]
        return W.CurveSpec(0.0, tuple(alpha), (), name=f"cos{args.k}-{args.eps:g}")
    if name == "image":
        return W.ImageCurve(TaylorSeries([0.0, 1.0, args.a]), name=f"image-{args.a:g}")
    if name in cat:
        return cat[name]
    raise UsageError(f"unknown catalog entry {name!r}; choose from {sorted(cat)} or ellipse, perturbed, image")


def _weld(args, curve=None):
    curve = curve or resolve_curve(args)
    N = max(64, args.order)
    return W.weld(curve, N=N, M=args.samples, tol=args.tol, maxiter=args.maxiter)


def resolve_pair(args) -> NormalizedPair:
    if getattr(args, "pair", None):
        return pair_from_json(json.loads(Path(args.pair).read_text()))
    return _weld(args).pair


# ---------------------------------------------------------------- subcommands

def cmd_weld(args) -> int:
    r = _weld(args)
    diag = r.diagnostics
    curve = r.curve
    payload = {"curve": getattr(curve, "name", ""), "config": _config(args), "diagnostics": diag,
               "self_residual_ok": max(diag["interior_self_residual"], diag["exterior_self_residual"])
               <= args.tol_self_residual}
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "pair.json").write_text(dumps(pair_to_json(r.pair)) + "\n")
        (out / "gamma.json").write_text(dumps(r.gamma.to_json()) + "\n")
        (out / "diagnostics.json").write_text(dumps(payload) + "\n")
    else:
        payload["pair"] = pair_to_json(r.pair)
        sys.stdout.write(dumps(payload) + "\n")
    return EXIT_OK if payload["self_residual_ok"] else EXIT_FAIL


def cmd_grunsky(args) -> int:
    p = resolve_pair(args)
    t = F.grunsky_table(p, args.order)
    b = O.blocks_from_table(t)
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "m", "B1_re", "B1_im", "B4_re", "B4_im"])
        for i in range(b.N):
            for j in range(b.N):
                w.writerow([i + 1, j + 1] + [f"{x:.17g}" for x in
                                             (b.B1[i, j].real, b.B1[i, j].imag, b.B4[i, j].real, b.B4[i, j].imag)])
        _emit(args, None, "grunsky.csv", buf.getvalue())
    else:
        payload = {"config": _config(args), "table": F.table_to_json(t),
                   "unitarity": O.unitarity_residuals(b)}
        _emit(args, payload, "grunsky.json")
    return EXIT_OK


def cmd_spectrum(args) -> int:
    p = resolve_pair(args)
    b = O.blocks_from_table(F.grunsky_table(p, args.order))
    r = O.fredholm_spectrum(b, block=args.block)
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "lambda", "fredholm_eig"])
        for i, lam in enumerate(r.lam, start=1):
            e = r.fredholm_eigs[2 * (i - 1)]
            w.writerow([i, f"{lam:.17g}", e if isinstance(e, str) else f"{e:.17g}"])
        _emit(args, None, "spectrum.csv", buf.getvalue())
    else:
        _emit(args, {"config": _config(args), "spectrum": r.to_json()}, "spectrum.json")
    return EXIT_OK


def _gamma(args):
    if getattr(args, "gamma", None):
        return W.CircleMap.from_json(json.loads(Path(args.gamma).read_text())), None
    if args.catalog in W.MOBIUS_CATALOG:
        a, alpha = W.MOBIUS_CATALOG[args.catalog]
        return W.CircleMap.mobius(a, alpha, args.samples), None
    r = _weld(args)
    return r.gamma, r


def cmd_kyns(args) -> int:
    gamma, r = _gamma(args)
    bl, km, change = W.kyns_blocks(gamma, args.order, check_alias=False)
    payload = {"config": _config(args), "inner": km.inner, "alias_energy": km.alias_energy,
               "section_cond": km.cond, "stabilisation": change,
               "symplectic": W.symplectic_residuals(km),
               "B1_norm": float(np.linalg.norm(bl.B1))}
    if r is not None:
        b = O.blocks_from_table(F.grunsky_table(r.pair, args.order))
        payload["B1_vs_series"] = float(np.linalg.norm(bl.B1 - b.B1))
        payload["B4_vs_series"] = float(np.linalg.norm(bl.B4 - b.B4))
    _emit(args, payload, "kyns.json")
    return EXIT_OK


def cmd_action(args) -> int:
    p = resolve_pair(args)
    rep = A.action_report(p, args.order)
    _emit(args, {"config": _config(args), "action": rep.to_json()}, "action.json")
    return EXIT_OK


def cmd_report(args) -> int:
    """Family sweep over the ellipse parameter: (t, s1, s2, residual_main)."""
    ts = [float(x) for x in args.t_values.split(",")]
    rows = []
    for t in ts:
        p = W.weld(W.EllipseCurve(t), N=max(64, args.order), M=args.samples, tol=args.tol,
                   maxiter=args.maxiter).pair
        sp = A.spectrum_of(p, args.order)
        a = A.s1(p)
        rows.append({"t": t, "s1": a, "s2": sp.s2, "residual_main": abs(sp.s2 + a / (12 * np.pi))})
    if args.format == "csv":
        _emit(args, None, "family.csv", A.family_csv(rows))
    else:
        _emit(args, {"config": _config(args), "family": rows}, "family.json")
    return EXIT_OK


# ---------------------------------------------------------------- verification

@dataclass
class VerificationSuite:
    checks: list = field(default_factory=list)  # (name, residual, tolerance, passed)
    config: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)

    def add(self, name: str, residual: float, tol: float, lower: bool = True):
        if lower:
            ok = bool(np.isfinite(residual) and residual <= tol)
        else:
            ok = bool(np.isfinite(residual) and residual >= tol)
        self.checks.append((name, float(residual), float(tol), ok))

    @property
    def passed(self) -> bool:
        return all(c[3] for c in self.checks)

    def to_json(self, with_timing: bool = False) -> dict:
        d = {"passed": self.passed, "config": self.config,
             "checks": [{"name": n, "residual": r, "tolerance": t, "pass": ok} for n, r, t, ok in self.checks]}
        if with_timing:
            d["timing"] = self.timing
        return d


def _tol(args, key):
    return getattr(args, f"tol_{key}")


def battery(suite: VerificationSuite, p: NormalizedPair, args, prefix: str = ""):
    """The pair-level checks shared by every case."""
    N = args.order
    t = F.grunsky_table(p, N)
    b = O.blocks_from_table(t)
    u = O.unitarity_residuals(b)
    for key in ("B1B1*+B2B2*-I", "B3B1*+B4B2*", "B1B3*+B2B4*", "B3B3*+B4B4*-I", "BB*-I", "B*B-I"):
        suite.add(f"{prefix}unitarity {key}", u[key], _tol(args, "unitarity"))
    sp = O.fredholm_spectrum(b)
    suite.add(f"{prefix}takagi reconstruction", sp.residuals["takagi_reconstruction"], _tol(args, "takagi"))
    U, lam = O.takagi(b.B1 if sp.block == "B1" else b.B4)
    for key, v in O.schur_relation_residuals(b, U, lam, sp.block).items():
        suite.add(f"{prefix}schur {key}", v, _tol(args, "schur"))
    suite.add(f"{prefix}det product vs det(I-BB*) [{sp.block}]",
              sp.residuals["prod_vs_B1" if sp.block == "B1" else "prod_vs_B4"], _tol(args, "det"))
    # the square B1 and B4 routes agree only once neither block leaks past column N
    if max(sp.leaks.values()) <= _tol(args, "det"):
        suite.add(f"{prefix}det B1 vs B4", sp.residuals["B1_vs_B4"], _tol(args, "det"))
    pm = O.period_matrices(b, sp.detF)
    suite.add(f"{prefix}period det N_omega vs detF", pm.residuals["det_N_omega_vs_detF"], _tol(args, "period"))
    suite.add(f"{prefix}period N_omega positive", pm.residuals["min_eig_N_omega"], 0.0, lower=False)
    _, _, rvk = A.vk_identity(p, t)
    suite.add(f"{prefix}vk identity", rvk, _tol(args, "vk"))
    for key, v in O.reflection_residuals(p, t, b).items():
        suite.add(f"{prefix}reflection {key}", v, _tol(args, "reflection"))
    grid = _disk_grid()
    br = O.brazilevic(p, NormalizedPair.identity(), grid, N=N)
    suite.add(f"{prefix}brazilevic min margin", float(br.margins.min()), _tol(args, "brazilevic"), lower=False)
    suite.add(f"{prefix}brazilevic norm margin", br.norm_margin, _tol(args, "brazilevic"), lower=False)
    sg = O.siegel_membership(b.B1)
    suite.add(f"{prefix}siegel I - Z conj(Z) min eig", sg["min_eig"], 0.0, lower=False)
    suite.add(f"{prefix}siegel symmetry", sg["symmetry"], _tol(args, "hirota"))
    for key, v in O.hirota_residuals(b).items():
        suite.add(f"{prefix}hirota {key}", v, _tol(args, "hirota"))
    a = A.s1(p)
    suite.add(f"{prefix}main identity", abs(sp.s2 + a / (12 * np.pi)), _tol(args, "main"))
    suite.add(f"{prefix}s1 symmetry", abs(a - A.s1_tilde(p)), _tol(args, "s1_symmetry"))
    sp_inv = A.spectrum_of(invert_model(p), N)
    suite.add(f"{prefix}s2 symmetry", abs(sp.s2 - sp_inv.s2), _tol(args, "s2_symmetry"))
    _, _, rs = A.polyakov_surgery(p, N, sp)
    suite.add(f"{prefix}surgery", rs, _tol(args, "surgery"))
    return sp


def _disk_grid(n: int = 100) -> np.ndarray:
    """10 radii up to 0.9 times 10 angles."""
    r = np.linspace(0.0, 0.9, 10)
    th = 2 * np.pi * np.arange(10) / 10 + 0.1
    return (r[:, None] * np.exp(1j * th)[None, :]).ravel()[:n]


def _family_checks(suite: VerificationSuite, args):
    fam = lambda t: W.weld(W.EllipseCurve(t), N=max(64, args.order), M=args.samples,  # noqa: E731
                           tol=args.tol, maxiter=args.maxiter).pair
    fd = A.family_derivative(fam, args.fd_t0, args.fd_h, N=args.order)
    suite.add("family derivative ratio", fd.ratio_residual, _tol(args, "family_ratio"))
    suite.add("family dS2 vs closed form", abs(fd.dS2 - A.ellipse_ds2_exact(args.fd_t0)),
              _tol(args, "family_closed_form"))


def _kyns_checks(suite: VerificationSuite, r, args, prefix=""):
    bl, km, _ = W.kyns_blocks(r.gamma, args.order, check_alias=False)
    b = O.blocks_from_table(F.grunsky_table(r.pair, args.order))
    suite.add(f"{prefix}kyns B1 vs series", float(np.linalg.norm(bl.B1 - b.B1)), _tol(args, "kyns"))
    for key, v in W.symplectic_residuals(km).items():
        suite.add(f"{prefix}kyns {key}", v, _tol(args, "kyns"))


def cmd_verify(args) -> int:
    suite = VerificationSuite(config=_config(args))
    t0 = time.perf_counter()
    case = args.case
    if case == "trivial":
        p = NormalizedPair.identity()
        battery(suite, p, args, "identity: ")
        for alpha in (0.3, 1.7):
            bl, km, _ = W.kyns_blocks(W.CircleMap.rotation(alpha, args.samples), 16)
            suite.add(f"rotation {alpha:g}: |B1|", float(np.linalg.norm(bl.B1)), _tol(args, "kyns"))
        for name, (a, alpha) in W.MOBIUS_CATALOG.items():
            bl, km, _ = W.kyns_blocks(W.CircleMap.mobius(a, alpha, args.samples), 16)
            suite.add(f"{name}: |B1|", float(np.linalg.norm(bl.B1)), _tol(args, "kyns"))
    elif case in ("ellipse", "perturbed"):
        if case == "ellipse":
            args.catalog = "ellipse"
        else:
            args.catalog = "perturbed"
        r = _weld(args)
        d = r.diagnostics
        suite.add("weld self residual", max(d["interior_self_residual"], d["exterior_self_residual"]),
                  _tol(args, "self_residual"))
        battery(suite, r.pair, args)
        if case == "ellipse" and not args.skip_family:
            _family_checks(suite, args)
    elif case == "kyns-cross":
        if args.catalog is None:
            args.catalog = "cos2-0.1"
        _kyns_checks(suite, _weld(args), args)
    elif case == "full":
        for name, curve in W.catalog().items():
            r = _weld(args, curve)
            d = r.diagnostics
            suite.add(f"{name}: weld self residual",
                      max(d["interior_self_residual"], d["exterior_self_residual"]), _tol(args, "self_residual"))
            battery(suite, r.pair, args, f"{name}: ")
        if not args.skip_family:
            _family_checks(suite, args)
    else:
        raise UsageError(f"unknown case {case!r}")
    suite.timing = {"seconds": time.perf_counter() - t0}
    _emit(args, suite.to_json(args.timing), "verify.json")
    for n, r_, t_, ok in suite.checks:
        if not ok:
            log.error("FAIL %s: %.3g vs %.3g", n, r_, t_)
    return EXIT_OK if suite.passed else EXIT_FAIL


# ---------------------------------------------------------------- parser

def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="grunsky", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command")

    def common(p, pair=True):
        p.add_argument("--catalog", default=None, help="catalog name, or ellipse / perturbed / image")
        p.add_argument("--curve", default=None, help="CurveSpec JSON file")
        if pair:
            p.add_argument("--pair", default=None, help="pair JSON written by weld")
        p.add_argument("--t", type=float, default=None, help="ellipse parameter")
        p.add_argument("--k", type=int, default=2, help="perturbation frequency")
        p.add_argument("--eps", type=float, default=0.1, help="perturbation size")
        p.add_argument("--a", type=float, default=0.1, help="coefficient of z^2 for the image curve")
        p.add_argument("--order", type=int, default=32)
        p.add_argument("--samples", type=int, default=4096)
        p.add_argument("--tol", type=float, default=1e-12)
        p.add_argument("--maxiter", type=int, default=200)
        p.add_argument("--out", default=None)
        p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("weld", help="Theodorsen welding of a curve")
    common(p, pair=False)
    p.add_argument("--tol-self-residual", type=float, default=TOLERANCES["self_residual"])
    p.set_defaults(func=cmd_weld)

    p = sub.add_parser("grunsky", help="Grunsky table of a pair")
    common(p)
    p.set_defaults(func=cmd_grunsky)

    p = sub.add_parser("spectrum", help="Fredholm spectrum and determinant")
    common(p)
    p.add_argument("--block", choices=("auto", "B1", "B4"), default="auto")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("kyns", help="period matrices of the welding homeomorphism")
    common(p, pair=False)
    p.add_argument("--gamma", default=None, help="CircleMap JSON written by weld")
    p.set_defaults(func=cmd_kyns)

    p = sub.add_parser("action", help="Liouville action, log Det_F and the identities tying them")
    common(p)
    p.set_defaults(func=cmd_action)

    p = sub.add_parser("report", help="ellipse family sweep")
    common(p, pair=False)
    p.add_argument("--t-values", default="0.1,0.2,0.3,0.4,0.5")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("verify", help="run a verification battery")
    common(p, pair=False)
    p.add_argument("--case", required=True)
    p.add_argument("--timing", action="store_true", help="include wall time (breaks byte-identical output)")
    p.add_argument("--skip-family", action="store_true", help="skip the finite-difference family check")
    p.add_argument("--fd-t0", type=float, default=0.3)
    p.add_argument("--fd-h", type=float, default=A.FD_STEP)
    for key, v in TOLERANCES.items():
        p.add_argument(f"--tol-{key.replace('_', '-')}", dest=f"tol_{key}", type=float, default=v)
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    if not getattr(args, "func", None):
        ap.print_usage(sys.stderr)
        return EXIT_USAGE
    if args.command == "verify" and args.case not in ("trivial", "ellipse", "perturbed", "kyns-cross", "full"):
        sys.stderr.write(f"unknown case {args.case!r}\n")
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as e:
        sys.stderr.write(f"usage error: {e}\n")
        return EXIT_USAGE
    except NormAtLeastOne as e:
        sys.stderr.write(f"{type(e).__name__}: {e}\n")
        return EXIT_SPECTRAL
    except SolverError as e:
        sys.stderr.write(f"{type(e).__name__}: {e}\n")
        return EXIT_SOLVER
    except (GrunskyError, ValueError, FileNotFoundError) as e:
        sys.stderr.write(f"{type(e).__name__}: {e}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
