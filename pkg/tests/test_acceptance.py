"""Acceptance criteria, one test per criterion.

Each test prints a single line "criterion k: PASS|FAIL  <detail>" to the
terminal (outside pytest capture) and then asserts.  Run on its own with

    pytest tests/test_acceptance.py -v
"""
import numpy as np
import pytest

from grunsky import action as A
from grunsky import cli
from grunsky import faber as F
from grunsky import operators as O
from grunsky import welding as W
from grunsky.errors import MonotonicityLost
from grunsky.pair import NormalizedPair, invert_model
from grunsky.series import TaylorSeries

N_MAIN = 48
N_DEFAULT = 32
# rounding of an N x N Frobenius norm built from FFT coefficients
MACHINE = 10 * N_DEFAULT * np.finfo(float).eps


@pytest.fixture
def announce(capsys):
    def emit(k, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return emit


def _blocks(p, N=N_DEFAULT):
    return O.blocks_from_table(F.grunsky_table(p, N))


def test_criterion_01_ellipse_diagonal(pairs, announce):
    worst_d = worst_o = 0.0
    for t in (0.3, 0.5):
        B4 = O.blocks_from_table(F.grunsky_table(pairs[f"ellipse-{t:g}"], 32)).B4
        n = np.arange(1, 33)
        worst_d = max(worst_d, np.max(np.abs(np.diag(B4) - t**n)))
        worst_o = max(worst_o, np.max(np.abs(B4 - np.diag(np.diag(B4)))))
    ok = worst_d <= 1e-12 and worst_o <= 1e-12
    assert announce(1, ok, f"max|B4_nn - t^n| = {worst_d:.2e}, off-diagonal {worst_o:.2e}")


def test_criterion_02_fredholm_closed_form(pairs, announce):
    sp = O.fredholm_spectrum(_blocks(pairs["ellipse-0.5"], 64))
    n = np.arange(1, 65)
    prod = np.prod(1 - 0.25**n)
    e1 = abs(sp.detF - prod)
    e2 = abs(sp.s2 - np.log(prod))
    ok = e1 <= 1e-12 and e2 <= 1e-12
    assert announce(2, ok, f"|DetF - prod| = {e1:.2e}, |S2 - log prod| = {e2:.2e}")


def test_criterion_03_main_identity(pairs, announce):
    names = ["ellipse-0.1", "ellipse-0.3", "ellipse-0.5", "cos2-0.05", "cos2-0.1", "cos3-0.05", "cos3-0.1"]
    res = {n: A.main_identity_residual(pairs[n], N_MAIN) for n in names}
    worst = max(res, key=res.get)
    ok = res[worst] <= 1e-5
    assert announce(3, ok, f"max |S2 + S1/(12 pi)| = {res[worst]:.2e} ({worst})")


UNITARITY_KEYS = ("B1B1*+B2B2*-I", "B3B1*+B4B2*", "B1B3*+B2B4*", "B3B3*+B4B4*-I", "BB*-I")


def test_criterion_04_unitarity(pairs, announce):
    worst, where = 0.0, ""
    for name, p in pairs.items():
        u = O.unitarity_residuals(_blocks(p))
        r = max(u[k] for k in UNITARITY_KEYS)
        if r > worst:
            worst, where = r, name
    # coarse doubling ladder without Newton refinement, so the trend is visible above rounding;
    # it starts at the first M the solver resolves (a crowded map needs a finer start)
    monotone = True
    for name, curve in W.catalog().items():
        M0 = 64
        while True:
            try:
                W.weld(curve, N=8, M=M0, refine=False)
                break
            except MonotonicityLost:
                M0 *= 2
        hist = []
        for step in range(4):
            N, M = 8 << step, M0 << step
            p = W.weld(curve, N=N, M=M, refine=False).pair
            u = O.unitarity_residuals(O.blocks_from_table(F.grunsky_table(p, N, check=False)))
            hist.append(max(u[k] for k in UNITARITY_KEYS))
        monotone &= all(b <= max(a, 1e-10) for a, b in zip(hist, hist[1:]))
    ok = worst <= 1e-6 and monotone
    assert announce(4, ok, f"max block residual {worst:.2e} ({where}); decreasing under doubling: {monotone}")


def test_criterion_05_kyns_cross_route(welded, announce):
    r = welded["ellipse-0.5"]
    # the alias guard would stop here; the criterion asks for the numbers at M = 4096
    bl, km, _ = W.kyns_blocks(r.gamma, 32, check_alias=False)
    series = _blocks(r.pair, 32)
    d = float(np.linalg.norm(bl.B1 - series.B1))
    sym = W.symplectic_residuals(km, 32)
    ok = d <= 1e-6 and max(sym.values()) <= 1e-6
    assert announce(5, ok, f"ellipse t=0.5, M={r.gamma.M}, alias energy {km.alias_energy:.1e}: |dB1|_F = {d:.2e}, "
                           f"AA*-BB*-I = {sym['AAstar_minus_BBstar']:.2e}, ABt-BAt = {sym['ABt_minus_BAt']:.2e}")


def test_criterion_06_takagi_schur(pairs, rng, announce):
    worst_rec = 0.0
    for n in (1, 5, 20, 60):
        Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        Z = Z + Z.T
        U, s = O.takagi(Z)
        worst_rec = max(worst_rec, np.linalg.norm(Z - (U * s) @ U.T) / max(1.0, np.linalg.norm(Z)))
    worst_schur, where = 0.0, ""
    for name, p in pairs.items():
        b = _blocks(p)
        for B in (b.B1, b.B4):
            U, s = O.takagi(B)
            worst_rec = max(worst_rec, np.linalg.norm(B - (U * s) @ U.T))
        side = O.fredholm_spectrum(b).block
        U, s = O.takagi(b.B1 if side == "B1" else b.B4)
        r = max(O.schur_relation_residuals(b, U, s, side).values())
        if r > worst_schur:
            worst_schur, where = r, f"{name}, {side} side"
    ok = worst_rec <= 1e-10 and worst_schur <= 1e-6
    assert announce(6, ok, f"reconstruction {worst_rec:.2e}; Schur relations {worst_schur:.2e} ({where})")


def test_criterion_07_determinants(pairs, announce):
    gaps, periods = {}, {}
    for name, p in pairs.items():
        gaps[name] = O.det_route_gap(p, N=32, tol=1e-8, max_N=128)
        b = _blocks(p)
        sp = O.fredholm_spectrum(b)
        periods[name] = O.period_matrices(b, sp.detF).residuals["det_N_omega_vs_detF"]
    gw = max(gaps, key=lambda k: gaps[k]["gap"])
    pw = max(periods, key=periods.get)
    ok = gaps[gw]["gap"] <= 1e-8 and periods[pw] <= 1e-8
    failing = sorted(k for k, v in gaps.items() if v["gap"] > 1e-8)
    assert announce(7, ok, f"max |det(I-B1B1*) - det(I-B4B4*)| = {gaps[gw]['gap']:.2e} ({gw}, N={gaps[gw]['N']}); "
                           f"max |det N_Omega - DetF| = {periods[pw]:.2e}; route gap fails on {failing}")


def test_criterion_08_velling_kirillov(pairs, announce):
    worst = max(A.vk_identity(p)[2] for p in pairs.values())
    a = 0.2
    bad = NormalizedPair(TaylorSeries([0, 1, a]), NormalizedPair.identity(4).g)
    control = A.vk_identity(bad)[2]
    ok = worst <= 1e-6 and control >= 0.1
    assert announce(8, ok, f"max residual {worst:.2e}; non-welding control {control:.3f}")


def test_criterion_09_reflection(pairs, announce):
    worst = 0.0
    decreasing = True
    for name, p in pairs.items():
        t = F.grunsky_table(p, N_DEFAULT)
        worst = max(worst, max(O.reflection_residuals(p, t).values()))
        sq = []
        for N in (16, 32):
            tN = F.grunsky_table(p, N)
            sq.append(max(O.reflection_residuals(p, tN, O.blocks_from_table(tN).square()).values()))
        # the circle is exact at every N
        decreasing &= sq[1] < sq[0] or sq[0] <= 1e-14
    ok = worst <= 1e-6 and decreasing
    assert announce(9, ok, f"max residual {worst:.2e}; square form decreasing 16 -> 32: {decreasing}")


def test_criterion_10_brazilevic(pairs, announce):
    grid = cli._disk_grid()
    ident = NormalizedPair.identity(64)
    combos = [("ellipse-0.3", None), ("cos2-0.1", None), ("cos3-0.1", "ellipse-0.1"),
              ("ellipse-0.1", "cos2-0.05"), ("cos3-0.05", "ellipse-0.3"), ("ellipse-0.5", None)]
    worst = np.inf
    for a, b in combos:
        r = O.brazilevic(pairs[a], ident if b is None else pairs[b], grid, N=N_MAIN)
        assert r.grid.size == 100
        worst = min(worst, float(r.margins.min()))
    q = 0.2
    quad = NormalizedPair(TaylorSeries([0, 1, q] + [0] * 30), ident)
    eq = abs(O.brazilevic(quad, ident, [0.0], N=1).margins[0])
    ok = worst >= 0 and eq <= 1e-10
    assert announce(10, ok, f"{len(combos)} combinations, min margin {worst:.2e}; equality gap at z=0 {eq:.2e}")


def test_criterion_11_symmetries(pairs, announce):
    w2 = max(abs(A.spectrum_of(p, N_MAIN).s2 - A.spectrum_of(invert_model(p), N_MAIN).s2) for p in pairs.values())
    w1 = max(abs(A.s1(p) - A.s1_tilde(p)) for p in pairs.values())
    ok = w2 <= 1e-8 and w1 <= 1e-6
    assert announce(11, ok, f"max |S2(mu) - S2(mu^-1)| = {w2:.2e}, max |S1 - S1~| = {w1:.2e}")


def test_criterion_12_surgery(pairs, announce):
    worst = max(A.polyakov_surgery(p, N_MAIN)[2] for p in pairs.values())
    assert announce(12, worst <= 1e-5, f"max |S2 - interior - exterior| = {worst:.2e}")


def test_criterion_13_family_derivative(announce):
    fam = lambda t: W.weld(W.EllipseCurve(t)).pair  # noqa: E731
    fd = A.family_derivative(fam, 0.3, h=1e-2, N=N_MAIN)
    cf = abs(fd.dS2 - A.ellipse_ds2_exact(0.3))
    ok = fd.ratio_residual <= 1e-4 and cf <= 1e-6
    assert announce(13, ok, f"ratio residual {fd.ratio_residual:.2e}, |dS2/dt - closed form| = {cf:.2e}")


def test_criterion_14_trivial_gauge(announce):
    args = cli.build_parser().parse_args(["verify", "--case", "trivial"])
    suite = cli.VerificationSuite()
    cli.battery(suite, NormalizedPair.identity(), args)
    # positivity margins are lower-bound checks with tolerance 0; everything else must vanish
    worst = max(r for _, r, tol, _ in suite.checks if tol > 0)
    rep = A.action_report(NormalizedPair.identity(), 16).to_json()
    worst = max(worst, max(abs(rep[k]) for k in ("s1", "s1_tilde", "s2")))
    rot = 0.0
    for alpha in (0.3, 1.7, np.pi):
        bl, km, _ = W.kyns_blocks(W.CircleMap.rotation(alpha, 4096), 16)
        rot = max(rot, float(np.linalg.norm(bl.B1)), max(W.symplectic_residuals(km, 16).values()))
    mob = 0.0
    for a, alpha in W.MOBIUS_CATALOG.values():
        bl, _, _ = W.kyns_blocks(W.CircleMap.mobius(a, alpha, 4096), 16)
        mob = max(mob, float(np.linalg.norm(bl.B1, 2)))
    ok = worst <= MACHINE and rot <= MACHINE and mob <= 1e-6
    assert announce(14, ok, f"identity max residual {worst:.1e}, rotations {rot:.1e}, Mobius |B1| {mob:.2e}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
