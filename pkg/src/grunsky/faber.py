"""Faber polynomials of a pair and the Grunsky coefficient table.

Coefficients b_{m,n} are read off the four compositions P_n(g), P_n(f), Q_n(g)
and Q_n(f) sampled on the unit circle.  The polynomials themselves are never
expanded in monomials for this: composing monomial coefficient rows cancels
catastrophically once n is a few dozen, whereas the recurrence

    P_1 = (w - b0) / b,
    P_{j+1} = ((w - b0) P_j - sum_{k=1}^{j-1} b_k P_{j-k} - (j+1) b_j) / b,

evaluated at points of the curve stays bounded.  Q_n(w) is P~_n(1/w) for the
exterior map f~(z) = 1 / f(1/z), whose leading coefficient is 1 / f'(0).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import series as S
from .errors import AliasingSuspected, InconsistentBlocks
from .pair import NormalizedPair
from .series import ExteriorSeries, TaylorSeries

CONSISTENCY_TOL = 1e-6
# relative size of the Fourier band near L/2 and of the last strip columns that stops grid doubling
TABLE_TAIL_TOL = 1e-13
MAX_TABLE_GRID = 1 << 17
ALIAS_TOL = 1e-11


@dataclass(frozen=True, eq=False)
class FaberSet:
    P: list  # P[n-1] holds coefficients of P_n, lowest power of w first
    Q: list  # Q[n-1][j] is the coefficient of w^{-j}, j = 0..n

    @property
    def order(self) -> int:
        return len(self.P)


@dataclass(eq=False)
class GrunskyTable:
    """Coefficients b_{m,n} for 1 <= |m|, |n| <= N plus the zero row and column.

    The row strips (shape N x width) keep the full inner range so products of
    blocks can be summed well past N; Bmm, Bpp, Bpm are their square parts.
    """

    rows_mm: np.ndarray  # [n-1, m-1] = b_{-n,-m}
    rows_pp: np.ndarray  # [n-1, m-1] = b_{n,m}
    rows_pm: np.ndarray  # [n-1, m-1] = b_{n,-m}
    rows_mp: np.ndarray  # [n-1, m-1] = b_{-n,m} = b_{m,-n}
    col_minus: np.ndarray  # b_{-k,0}
    col_plus: np.ndarray  # b_{k,0}
    b00: complex
    meta: dict = field(default_factory=dict)

    @property
    def order(self) -> int:
        return self.rows_mm.shape[0]

    @property
    def width(self) -> int:
        return self.rows_mm.shape[1]

    @property
    def Bmm(self) -> np.ndarray:
        N = self.order
        return self.rows_mm[:, :N]

    @property
    def Bpp(self) -> np.ndarray:
        N = self.order
        return self.rows_pp[:, :N]

    @property
    def Bpm(self) -> np.ndarray:
        """[m-1, n-1] = b_{m,-n}."""
        N = self.order
        return self.rows_pm[:, :N]

    def truncate(self, N: int) -> "GrunskyTable":
        return GrunskyTable(
            self.rows_mm[:N], self.rows_pp[:N], self.rows_pm[:N], self.rows_mp[:N],
            self.col_minus[:N], self.col_plus[:N], self.b00, dict(self.meta),
        )


# ---------------------------------------------------------------- Faber polynomials

def _exterior_of_f(f: TaylorSeries, n: int) -> ExteriorSeries:
    """f~(z) = 1 / f(1/z) = z / F(1/z) with F = f / z, through n tail terms."""
    F = TaylorSeries(f.coeffs[1:]).truncate(n + 1)
    return ExteriorSeries.from_G(S.reciprocal(F))


def faber_values(g: ExteriorSeries, w, N: int) -> np.ndarray:
    """P_1(w), ..., P_N(w) of the exterior map g, by the recurrence."""
    w = np.asarray(w, dtype=complex)
    tail = g.truncate(max(N, 1)).tail
    out = np.empty((N,) + w.shape, complex)
    if N == 0:
        return out
    u = w - g.b0
    # rows stored in reverse (rev[N-1-i] = P_{i+1}) so the convolution reads a contiguous block
    rev = np.empty((N, u.size), complex)
    uf = u.ravel()
    rev[N - 1] = uf / g.b
    for j in range(1, N):
        acc = uf * rev[N - j] - (j + 1) * tail[j - 1]
        if j > 1:
            # sum_{k=1}^{j-1} tail_{k-1} P_{j-k}
            acc -= tail[: j - 1] @ rev[N - j + 1 :]
        rev[N - 1 - j] = acc / g.b
    out[:] = rev[::-1].reshape(out.shape)
    return out


def faber_values_Q(f: TaylorSeries, w, N: int) -> np.ndarray:
    """Q_1(w), ..., Q_N(w) of the interior map f."""
    w = np.asarray(w, dtype=complex)
    return faber_values(_exterior_of_f(f, N), 1.0 / w, N)


def _inverse_at_infinity(g: ExteriorSeries, N: int) -> TaylorSeries:
    """R with g^{-1}(w) = w R(1/w), through order N."""
    G = g.G().truncate(N + 1)
    s = TaylorSeries(np.concatenate([[0.0], S.reciprocal(G).coeffs]))  # 1/g(1/x)
    r = S.revert(s.truncate(N + 2))
    return S.reciprocal(TaylorSeries(r.coeffs[1:]))  # u / s^{-1}(u)


def faber_polys(p: NormalizedPair, N: int) -> FaberSet:
    """Coefficient rows of P_n and Q_n, built by reversion and powers."""
    R = _inverse_at_infinity(p.g, N)
    P = []
    Rn = TaylorSeries.constant(1.0, N)
    for n in range(1, N + 1):
        Rn = S.mul(Rn, R.truncate(N))
        # (g^{-1})^n = sum_k [R^n]_k w^{n-k}; keep k <= n
        P.append(Rn.coeffs[: n + 1][::-1].copy())
    fi = S.revert(p.f.truncate(N + 1))
    T = TaylorSeries(fi.coeffs[1:]).truncate(N)  # f^{-1}(w) / w
    Tinv = S.reciprocal(T)
    Q = []
    Tn = TaylorSeries.constant(1.0, N)
    for n in range(1, N + 1):
        Tn = S.mul(Tn, Tinv)
        # w^{-n} T^{-n}: coefficient of w^{-j} is [T^{-n}]_{n-j}
        Q.append(Tn.coeffs[: n + 1][::-1].copy())
    return FaberSet(P, Q)


def eval_faber_row(coeffs: np.ndarray, w, negative: bool = False):
    w = np.asarray(w, dtype=complex)
    x = 1.0 / w if negative else w
    return S._horner(np.asarray(coeffs, complex), x)


# ---------------------------------------------------------------- Grunsky table

def _grid_size(p: NormalizedPair, N: int) -> int:
    need = max(4 * (p.f.order + 1), 4 * (p.g.order + 2), 8 * N, 512)
    return 1 << int(np.ceil(np.log2(need)))


def _fft_coeffs(vals: np.ndarray) -> np.ndarray:
    """Fourier coefficients along the last axis, c[k] multiplies e^{ik theta}."""
    return np.fft.fft(vals, axis=-1) / vals.shape[-1]


def _tail_ratio(c: np.ndarray) -> float:
    L = c.shape[-1]
    a = np.abs(c)
    band = a[..., 3 * L // 8 : 5 * L // 8]
    return float(band.max() / max(a.max(), 1e-300))


def grunsky_table(p: NormalizedPair, N: int = S.DEFAULT_ORDER, check: bool = True,
                  L: int | None = None, width: int | None = None) -> GrunskyTable:
    """Grunsky coefficients of a normalized pair through order N.

    With check=True an InconsistentBlocks error is raised when the two reads of
    b_{m,-n} (from P_n(f) and from Q_n(g)) disagree.  Both are coefficients of
    one bivariate series, so a mismatch means aliasing or an under-resolved
    grid; a pair that is not a welding passes this check and is caught by the
    unitarity residuals instead.
    """
    if L is not None:
        return _table_from_maps(p.f, p.g, N, check=check, L=L, width=width)
    # rows of B2 and B3 spread past column N, so the grid doubles until the strips have decayed
    L = _grid_size(p, N)
    while True:
        t = _table_from_maps(p.f, p.g, N, check=check, L=L, width=width)
        if (t.meta["alias_ratio"] <= TABLE_TAIL_TOL and t.meta["strip_tail"] <= TABLE_TAIL_TOL) \
                or L >= MAX_TABLE_GRID:
            return t
        L *= 2


def _table_from_maps(f: TaylorSeries, g: ExteriorSeries, N: int, check=True, L=None,
                     width=None, grid=None) -> GrunskyTable:
    L = L or grid
    if L is None:
        L = 1 << int(np.ceil(np.log2(max(4 * (f.order + 1), 4 * (g.order + 2), 8 * N, 512))))
    K = width or L // 4
    K = max(N, min(K, L // 2 - 1))
    fb = S.boundary_values(f, L)
    gb = S.boundary_values(g, L)
    fstar = _exterior_of_f(f, N)
    n = np.arange(1, N + 1)[:, None]

    Pg = _fft_coeffs(faber_values(g, gb, N))
    Pf = _fft_coeffs(faber_values(g, fb, N))
    Qg = _fft_coeffs(faber_values(fstar, 1.0 / gb, N))
    Qf = _fft_coeffs(faber_values(fstar, 1.0 / fb, N))
    alias = max(_tail_ratio(c) for c in (Pg, Pf, Qg, Qf))

    m = np.arange(1, K + 1)
    rows_pp = Pg[:, (-m) % L] / n
    rows_pm = Pf[:, m] / n
    rows_mp = Qg[:, (-m) % L] / n
    rows_mm = Qf[:, m] / n

    # columns: log(f/z) = -sum b_{-k,0} z^k and log(g/z) = b00 - sum b_{k,0} z^{-k}
    lf = S.log_nonzero(TaylorSeries(f.coeffs[1:]).truncate(N))
    col_minus = -lf.coeffs[1 : N + 1]
    G = g.G().truncate(N)
    lg = S.log_nonzero(G)
    col_plus = -lg.coeffs[1 : N + 1]
    b00 = complex(np.log(g.b))

    cons = float(np.max(np.abs(rows_pm[:, :N] - rows_mp[:, :N].T))) if N else 0.0
    # the constant terms of P_n(f) and Q_n(g) give the same columns again
    col_cons = float(max(np.max(np.abs(Pf[:, 0] / n[:, 0] - col_plus)),
                         np.max(np.abs(-Qg[:, 0] / n[:, 0] - col_minus)))) if N else 0.0
    strips = (rows_pp, rows_pm, rows_mp, rows_mm)
    top = max(float(np.abs(r).max(initial=0.0)) for r in strips)
    edge = max(float(np.abs(r[:, -max(1, K // 8):]).max(initial=0.0)) for r in strips)
    meta = {"grid": L, "width": K, "consistency": cons, "column_consistency": col_cons,
            "alias_ratio": alias, "strip_tail": edge / top if top else 0.0}
    if check and max(cons, col_cons) > CONSISTENCY_TOL:
        raise InconsistentBlocks(
            f"two reads of b(m,-n) differ by {max(cons, col_cons):.3g}; input is not a welding pair")
    return GrunskyTable(rows_mm, rows_pp, rows_pm, rows_mp, col_minus, col_plus, b00, meta)


def interior_block(f: TaylorSeries, N: int, L: int | None = None) -> np.ndarray:
    """b_{-n,-m} for n, m <= N from f alone."""
    L = L or 1 << int(np.ceil(np.log2(max(4 * (f.order + 1), 8 * N, 512))))
    fb = S.boundary_values(f, L)
    Qf = _fft_coeffs(faber_values(_exterior_of_f(f, N), 1.0 / fb, N))
    n = np.arange(1, N + 1)[:, None]
    return Qf[:, 1 : N + 1] / n


def exterior_block(g: ExteriorSeries, N: int, L: int | None = None) -> np.ndarray:
    """b_{n,m} for n, m <= N from g alone."""
    L = L or 1 << int(np.ceil(np.log2(max(4 * (g.order + 2), 8 * N, 512))))
    gb = S.boundary_values(g, L)
    Pg = _fft_coeffs(faber_values(g, gb, N))
    n = np.arange(1, N + 1)[:, None]
    return Pg[:, (-np.arange(1, N + 1)) % L] / n


# ---------------------------------------------------------------- bivariate oracle

def _bmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n1, n2 = a.shape
    out = np.zeros_like(a)
    for i in range(n1):
        for j in range(n2):
            if a[i, j] != 0:
                out[i:, j:] += a[i, j] * b[: n1 - i, : n2 - j]
    return out


def _blog1p(u: np.ndarray) -> np.ndarray:
    """log(1 + u) for a bivariate series with u[0, 0] = 0."""
    n1, n2 = u.shape
    out = np.zeros_like(u)
    term = u.copy()
    for k in range(1, n1 + n2):
        out += ((-1) ** (k + 1) / k) * term
        term = _bmul(term, u)
        if not np.any(term):
            break
    return out


def _h_matrix(k: int, n: int) -> np.ndarray:
    """Complete homogeneous h_k(x, y) as an (n+1) x (n+1) coefficient array."""
    h = np.zeros((n + 1, n + 1), complex)
    for i in range(k + 1):
        if i <= n and k - i <= n:
            h[i, k - i] = 1.0
    return h


def grunsky_table_direct(p: NormalizedPair, N_small: int = 6) -> GrunskyTable:
    """Reference table from bivariate truncated logarithms; meant for N_small <= 8."""
    if N_small > 8:
        raise ValueError("the bivariate oracle is limited to order 8")
    N = N_small
    # a coefficient of z^n zeta^m sees map coefficients up to order n + m + 1
    f = p.f.truncate(2 * N + 1).coeffs
    g = p.g.truncate(2 * N + 1)
    b = g.b
    n1 = N + 1

    # (g(z) - g(zeta)) / (z - zeta) = b - sum_k b_k x y h_{k-1}(x, y), x = 1/z, y = 1/zeta
    u = np.zeros((n1, n1), complex)
    for k in range(1, 2 * N):
        u[1:, 1:] -= (g.tail[k - 1] / b) * _h_matrix(k - 1, N)[:-1, :-1]
    Lpp = _blog1p(u)

    # (g(z) - f(zeta)) / (b z) in x = 1/z and zeta
    v = np.zeros((n1, n1), complex)
    v[1, 0] += g.b0 / b
    for k in range(1, N):
        v[k + 1, 0] += g.tail[k - 1] / b
    v[1, :] -= f[:n1] / b
    Lpm = _blog1p(v)

    # (f(z) - f(zeta)) / (z - zeta) = sum_k a_k h_{k-1}(z, zeta)
    w = np.zeros((n1, n1), complex)
    for k in range(2, 2 * N + 2):
        w += f[k] * _h_matrix(k - 1, N)
    Lmm = _blog1p(w)

    rows_pp = -Lpp[1:, 1:]
    rows_pm = -Lpm[1:, 1:]
    rows_mm = -Lmm[1:, 1:]
    return GrunskyTable(
        rows_mm, rows_pp, rows_pm, rows_pm.T.copy(),
        -Lmm[1:, 0], -Lpm[1:, 0], complex(np.log(b)), {"route": "bivariate"},
    )


# ---------------------------------------------------------------- identities

def faber_identity_residual(p: NormalizedPair, table: GrunskyTable, samples) -> float:
    """max |P_n(g(z)) - z^n - n sum_m b_{nm} z^{-m}| over samples and n <= N."""
    z = np.asarray(samples, dtype=complex).ravel()
    N = table.order
    P = faber_values(p.g, p.g(z), N)
    K = table.width
    zm = z[None, :] ** (-np.arange(1, K + 1)[:, None])
    n = np.arange(1, N + 1)[:, None]
    pred = z[None, :] ** n + n * (table.rows_pp @ zm)
    return float(np.max(np.abs(P - pred))) if N else 0.0


# ---------------------------------------------------------------- JSON

def _mat(a: np.ndarray):
    return [[[float(x.real), float(x.imag)] for x in row] for row in np.atleast_2d(a)]


def table_to_json(t: GrunskyTable) -> dict:
    return {
        "order": t.order,
        "b00": [t.b00.real, t.b00.imag],
        "Bmm": _mat(t.Bmm),
        "Bpp": _mat(t.Bpp),
        "Bpm": _mat(t.Bpm),
        "col_minus": [[float(x.real), float(x.imag)] for x in t.col_minus],
        "col_plus": [[float(x.real), float(x.imag)] for x in t.col_plus],
        "consistency": t.meta.get("consistency", 0.0),
    }
