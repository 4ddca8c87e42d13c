import numpy as np
import pytest

from grunsky import faber as F
from grunsky import series as S
from grunsky import welding as W
from grunsky.errors import InconsistentBlocks
from grunsky.pair import NormalizedPair, invert_model
from grunsky.series import ExteriorSeries, TaylorSeries


def joukowski_pair(t, order=64):
    return NormalizedPair(TaylorSeries.identity(order), ExteriorSeries(1.0, 0.0, [t] + [0.0] * (order - 1)))


def torus_log_coeffs(fun, deriv, r, M=64):
    """2-D FFT of log((h(z) - h(zeta)) / (c (z - zeta))) sampled on |z| = |zeta| = r.

    Returns a[j, k] with the log ~ sum a[j, k] (z/r)^j (zeta/r)^k folded mod M.
    """
    th = 2 * np.pi * np.arange(M) / M
    z = r * np.exp(1j * th)
    Z, Zt = np.meshgrid(z, z, indexing="ij")
    hz, hzt = fun(Z), fun(Zt)
    with np.errstate(invalid="ignore", divide="ignore"):
        q = (hz - hzt) / (Z - Zt)
    diag = np.isclose(Z, Zt, rtol=0, atol=1e-14)
    q[diag] = deriv(Z[diag])
    return np.fft.fft2(np.log(q)) / M**2


def test_faber_polys_identity():
    fs = F.faber_polys(NormalizedPair.identity(8), 5)
    for n, (P, Q) in enumerate(zip(fs.P, fs.Q), start=1):
        e = np.zeros(n + 1)
        e[n] = 1
        assert np.allclose(P, e)
        assert np.allclose(Q, e)


def test_faber_polys_joukowski():
    t = 0.37
    fs = F.faber_polys(joukowski_pair(t, 16), 4)
    assert np.allclose(fs.P[0], [0, 1])
    assert np.allclose(fs.P[1], [-2 * t, 0, 1], atol=1e-15)


def test_faber_leading_coefficients(pairs):
    p = pairs["cos3-0.1"]
    fs = F.faber_polys(p, 6)
    for n, P in enumerate(fs.P, start=1):
        assert abs(P[n] - p.g.b ** (-n)) <= 1e-12


def test_faber_recurrence_matches_polynomials(pairs):
    p = pairs["cos2-0.1"]
    fs = F.faber_polys(p, 8)
    w = np.array([1.3 + 0.2j, -0.4 + 1.1j, 2.0])
    vals = F.faber_values(p.g, w, 8)
    for n in range(8):
        assert np.allclose(vals[n], F.eval_faber_row(fs.P[n], w), atol=1e-10)


def test_identity_table_zero():
    t = F.grunsky_table(NormalizedPair.identity(16), 8)
    for blk in (t.Bmm, t.Bpp, t.col_minus, t.col_plus):
        assert np.all(np.abs(blk) <= 1e-15)
    assert t.b00 == 0
    # log(1 - zeta/z) gives b_{n,-n} = 1/n, which is B2 = B3 = I after the sqrt(nm) weights
    assert np.max(np.abs(t.Bpm - np.diag(1 / np.arange(1, 9)))) <= 1e-15


@pytest.mark.parametrize("t", [0.3, 0.5])
def test_ellipse_exterior_block(t):
    N = 32
    tab = F.grunsky_table(joukowski_pair(t), N, check=False)
    n = np.arange(1, N + 1)
    # log(1 - t/(z zeta)) = -sum t^n / n (z zeta)^{-n}
    assert np.max(np.abs(np.diag(tab.Bpp) - t**n / n)) <= 1e-15
    assert np.max(np.abs(tab.Bpp - np.diag(np.diag(tab.Bpp)))) <= 1e-15


def test_quadratic_interior_entry():
    a = 0.15 + 0.05j
    p = NormalizedPair(TaylorSeries([0, 1, a] + [0] * 30), ExteriorSeries.identity(32))
    tab = F.grunsky_table(p, 6, check=False)
    assert abs(tab.Bmm[0, 0] - a * a) <= 1e-15


def test_interior_block_against_torus_oracle():
    f = TaylorSeries([0, 1, 0.2, -0.05j, 0.01])
    N, r, M = 6, 0.5, 64
    a = torus_log_coeffs(lambda z: S.evaluate(f, z), lambda z: S.evaluate(S.derivative(f), z), r, M)
    j = np.arange(1, N + 1)
    oracle = -a[1 : N + 1, 1 : N + 1] / r ** np.add.outer(j, j)
    assert np.max(np.abs(F.interior_block(f, N) - oracle)) <= 1e-12


def test_exterior_block_against_torus_oracle(pairs):
    g = pairs["cos3-0.1"].g
    N, R, M = 6, 1.6, 128
    # in x = 1/z the log is sum b_{n,m} x^n y^m with a minus sign
    gx = lambda x: g(1 / x)  # noqa: E731
    dgx = lambda x: -g.derivative_at(1 / x) / x**2  # noqa: E731
    r = 1 / R
    th = 2 * np.pi * np.arange(M) / M
    x = r * np.exp(1j * th)
    X, Y = np.meshgrid(x, x, indexing="ij")
    with np.errstate(invalid="ignore", divide="ignore"):
        q = (gx(X) - gx(Y)) / (1 / X - 1 / Y) / g.b
    diag = np.isclose(X, Y, rtol=0, atol=1e-14)
    q[diag] = dgx(X[diag]) * (-X[diag] ** 2) / g.b
    a = np.fft.fft2(np.log(q)) / M**2
    j = np.arange(1, N + 1)
    oracle = -a[1 : N + 1, 1 : N + 1] / r ** np.add.outer(j, j)
    assert np.max(np.abs(F.exterior_block(g, N) - oracle)) <= 1e-10


def test_direct_route_matches_fft_on_ellipse(pairs):
    p = pairs["ellipse-0.5"]
    fft = F.grunsky_table(p, 8)
    direct = F.grunsky_table_direct(p, 8)
    for a, b in ((fft.Bmm, direct.Bmm), (fft.Bpp, direct.Bpp), (fft.Bpm, direct.Bpm)):
        assert np.max(np.abs(a - b)) <= 1e-12
    assert np.max(np.abs(fft.col_minus - direct.col_minus)) <= 1e-12
    assert np.max(np.abs(fft.col_plus - direct.col_plus)) <= 1e-12


@pytest.mark.parametrize("name", ["cos2-0.1", "cos3-0.05"])
def test_direct_route_matches_fft_on_welded(pairs, name):
    p = pairs[name]
    fft = F.grunsky_table(p, 8)
    direct = F.grunsky_table_direct(p, 8)
    for a, b in ((fft.Bmm, direct.Bmm), (fft.Bpp, direct.Bpp), (fft.Bpm, direct.Bpm)):
        assert np.max(np.abs(a - b)) <= 1e-8


def test_direct_route_order_limit():
    with pytest.raises(ValueError):
        F.grunsky_table_direct(NormalizedPair.identity(32), 9)


def test_table_symmetry_and_b00(pairs):
    for name, p in pairs.items():
        t = F.grunsky_table(p, 24)
        assert np.max(np.abs(t.Bmm - t.Bmm.T)) <= 1e-10, name
        assert np.max(np.abs(t.Bpp - t.Bpp.T)) <= 1e-10, name
        assert t.b00 == np.log(p.g.b)


def test_non_welding_pair_passes_consistency_but_not_unitarity():
    from grunsky.operators import blocks_from_table, unitarity_residuals

    p = NormalizedPair(TaylorSeries([0, 1, 0.3] + [0] * 30), ExteriorSeries.identity(32))
    t = F.grunsky_table(p, 8)
    assert t.meta["consistency"] <= 1e-12
    assert unitarity_residuals(blocks_from_table(t))["BB*-I"] > 1e-2


def test_aliased_grid_is_flagged(pairs):
    # a grid too coarse for the map folds coefficients and the two reads disagree
    with pytest.raises(InconsistentBlocks):
        F.grunsky_table(pairs["ellipse-0.5"], 8, L=64)


def test_identity_residual_ellipse_ring(pairs):
    p = pairs["ellipse-0.3"]
    t = F.grunsky_table(p, 16)
    z = 1.5 * np.exp(2j * np.pi * np.arange(64) / 64)
    assert F.faber_identity_residual(p, t, z) <= 1e-10
    ident = NormalizedPair.identity(8)
    assert F.faber_identity_residual(ident, F.grunsky_table(ident, 4), z) <= 1e-14


def test_dilation_invariance(pairs):
    # scaling g by r shifts b00 by log r and leaves the two symmetric blocks alone
    p = pairs["cos2-0.05"]
    r = 1.9
    q = NormalizedPair(p.f, ExteriorSeries(p.g.b * r, p.g.b0 * r, p.g.tail * r))
    tp = F.grunsky_table(p, 12)
    tq = F.grunsky_table(q, 12, check=False)
    assert np.max(np.abs(tp.Bpp - tq.Bpp)) <= 1e-12
    assert np.max(np.abs(tp.Bmm - tq.Bmm)) <= 1e-12
    assert abs(tq.b00 - tp.b00 - np.log(r)) <= 1e-14
    z = 1.5 * np.exp(2j * np.pi * np.arange(32) / 32)
    assert abs(F.faber_identity_residual(q, tq, z) - F.faber_identity_residual(p, tp, z)) <= 1e-12


def test_velling_kirillov_columns(pairs):
    # the columns stop at N, so only maps whose log series has decayed by then are used here
    for name in ("ellipse-0.1", "cos2-0.1", "cos3-0.1"):
        t = F.grunsky_table(pairs[name], 48)
        k = np.arange(1, 49)
        right = np.sum(k * (np.abs(t.col_plus) ** 2 + np.abs(t.col_minus) ** 2))
        assert abs(2 * t.b00.real - right) <= 1e-8, name


def test_consistency_recorded(pairs):
    t = F.grunsky_table(pairs["cos3-0.1"], 16)
    assert t.meta["consistency"] <= F.CONSISTENCY_TOL


def test_table_json(pairs):
    d = F.table_to_json(F.grunsky_table(pairs["cos2-0.1"], 4))
    assert d["order"] == 4 and len(d["Bmm"]) == 4 and len(d["Bmm"][0][0]) == 2


def test_inverted_pair_table_mirrors(pairs):
    p = pairs["cos3-0.05"]
    t, ti = F.grunsky_table(p, 10), F.grunsky_table(invert_model(p), 10)
    assert np.max(np.abs(ti.Bpp - t.Bmm.conj())) <= 1e-12
