"""The Grunsky blocks as finite matrices and the spectral data built from them."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla

from . import series as S
from .errors import NormAtLeastOne, NotSymmetric, SingularScaling
from .faber import GrunskyTable, interior_block
from .pair import NormalizedPair, pre_schwarzian, schwarzian
from .series import TaylorSeries

SYMMETRY_TOL = 1e-6
CLUSTER_GAP = 1e-8
ZERO_LAMBDA = 1e-14


@dataclass(eq=False)
class GrunskyBlocks:
    """B1..B4 truncated to N x N.

    When the blocks come from a table, `rows` holds the N x width strips
    (rows 1..N of each infinite block) so products like B1 B1^* can be summed
    over the full inner index instead of only the first N terms.
    """

    B1: np.ndarray
    B2: np.ndarray
    B3: np.ndarray
    B4: np.ndarray
    rows: Optional[tuple] = None
    source: str = "table"

    @property
    def N(self) -> int:
        return self.B1.shape[0]

    @property
    def full(self) -> np.ndarray:
        return np.block([[self.B1, self.B2], [self.B3, self.B4]])

    def truncate(self, N: int) -> "GrunskyBlocks":
        rows = tuple(r[:N] for r in self.rows) if self.rows is not None else None
        return GrunskyBlocks(self.B1[:N, :N], self.B2[:N, :N], self.B3[:N, :N], self.B4[:N, :N],
                             rows, self.source)

    def square(self) -> "GrunskyBlocks":
        """Same blocks without the wide strips."""
        return GrunskyBlocks(self.B1, self.B2, self.B3, self.B4, None, self.source)

    @classmethod
    def identity(cls, N: int) -> "GrunskyBlocks":
        Z, I = np.zeros((N, N), complex), np.eye(N, dtype=complex)
        return cls(Z, I.copy(), I.copy(), Z.copy(), None, "identity")


def _weights(N: int, K: int) -> np.ndarray:
    return np.sqrt(np.outer(np.arange(1, N + 1), np.arange(1, K + 1)))


def blocks_from_table(t: GrunskyTable) -> GrunskyBlocks:
    N, K = t.order, t.width
    w = _weights(N, K)
    r1 = w * t.rows_mm  # sqrt(nm) b_{-n,-m}
    r2 = w * t.rows_mp  # sqrt(nm) b_{-n,m}
    r3 = w * t.rows_pm  # sqrt(nm) b_{n,-m}
    r4 = w * t.rows_pp  # sqrt(nm) b_{n,m}
    sq = slice(0, N)
    return GrunskyBlocks(r1[:, sq], r2[:, sq], r3[:, sq], r4[:, sq], (r1, r2, r3, r4), "table")


# ---------------------------------------------------------------- unitarity

def _row_products(b: GrunskyBlocks):
    """The N x N leading parts of B B^* and B^* B, with inner sums as long as available."""
    if b.rows is not None:
        r1, r2, r3, r4 = b.rows
        # columns of B1, B4 are their rows (symmetry); columns of B3 are rows of B2 and vice versa
        c1, c2, c3, c4 = r1, r3, r2, r4
    else:
        r1, r2, r3, r4 = b.B1, b.B2, b.B3, b.B4
        c1, c2, c3, c4 = b.B1.T, b.B2.T, b.B3.T, b.B4.T
    H = lambda x, y: x @ y.conj().T  # noqa: E731  (x y^*)[n, m] = sum_k x[n,k] conj(y[m,k])
    I = np.eye(b.N)
    BBs = {
        "11": H(r1, r1) + H(r2, r2) - I,
        "31": H(r3, r1) + H(r4, r2),
        "13": H(r1, r3) + H(r2, r4),
        "33": H(r3, r3) + H(r4, r4) - I,
    }
    # (X^* Y)[n, m] = sum_k conj(X[k, n]) Y[k, m] = (conj(cx) cy^T)[n, m]
    G = lambda x, y: x.conj() @ y.T  # noqa: E731
    BsB = {
        "11": G(c1, c1) + G(c3, c3) - I,
        "12": G(c1, c2) + G(c3, c4),
        "21": G(c2, c1) + G(c4, c3),
        "22": G(c2, c2) + G(c4, c4) - I,
    }
    return BBs, BsB


def unitarity_residuals(b: GrunskyBlocks) -> dict:
    BBs, BsB = _row_products(b)
    fro = np.linalg.norm
    out = {
        "B1B1*+B2B2*-I": float(fro(BBs["11"])),
        "B3B1*+B4B2*": float(fro(BBs["31"])),
        "B1B3*+B2B4*": float(fro(BBs["13"])),
        "B3B3*+B4B4*-I": float(fro(BBs["33"])),
    }
    out["BB*-I"] = float(np.sqrt(sum(fro(v) ** 2 for v in BBs.values())))
    out["B*B-I"] = float(np.sqrt(sum(fro(v) ** 2 for v in BsB.values())))
    out["sym_B1"] = float(fro(b.B1 - b.B1.T))
    out["sym_B4"] = float(fro(b.B4 - b.B4.T))
    out["B3-B2t"] = float(fro(b.B3 - b.B2.T))
    return out


# ---------------------------------------------------------------- Takagi

def takagi(B1: np.ndarray, gap: float = CLUSTER_GAP):
    """Factor a complex symmetric matrix as U D U^T with U unitary and D >= 0.

    From the SVD B1 = W diag(s) V^*, the matrix W^T conj(V) is unitary and,
    by symmetry, commutes with diag(s).  Its square root on each cluster of
    equal singular values gives the phase correction U = W sqrt(W^* conj(B1) ...).
    """
    A = np.asarray(B1, dtype=complex)
    n = A.shape[0]
    if n == 0:
        return np.zeros((0, 0), complex), np.zeros(0)
    scale = max(1.0, np.linalg.norm(A))
    if np.linalg.norm(A - A.T) > SYMMETRY_TOL * scale:
        raise NotSymmetric("Takagi factorization needs a symmetric matrix")
    A = (A + A.T) / 2
    W, s, Vh = np.linalg.svd(A)
    # A = A^T forces Vh = Z W^T with Z = Vh conj(W) unitary and block diagonal over clusters of s
    Z = Vh @ np.conj(W)
    U = W.copy()
    i = 0
    while i < n:
        j = i + 1
        while j < n and abs(s[j - 1] - s[j]) <= gap * max(1.0, s[i]):
            j += 1
        if s[i] <= ZERO_LAMBDA * scale and j - i >= 1:
            # null cluster: any unitary works, keep W
            i = j
            continue
        blk = Z[i:j, i:j]
        # A = W s Vh and Vh = Z W^T on the cluster, so A = W s Z W^T;
        # with R = sqrtm(Z) (commutes with s), A = (W R) s (W R)^T
        R = sla.sqrtm(blk) if j - i > 1 else np.sqrt(blk)
        U[:, i:j] = W[:, i:j] @ R
        i = j
    return U, s


def takagi_doubled(B1: np.ndarray):
    """Reference: singular values from the real symmetric doubled operator.

    Writing B1 = X + iY, the operator x -> B1 conj(x) on C^n is the real
    symmetric map [[X, Y], [Y, -X]] on R^{2n}; its eigenvalues are the pairs
    +-s_k and the positive eigenvectors give Takagi vectors directly.
    """
    A = np.asarray(B1, dtype=complex)
    n = A.shape[0]
    X, Y = A.real, A.imag
    M = np.block([[X, Y], [Y, -X]])
    ev, vec = np.linalg.eigh(M)
    order = np.argsort(ev)[::-1][:n]
    s = ev[order]
    vs = vec[:, order]
    U = (vs[:n] + 1j * vs[n:]) * np.sqrt(2)
    # orthonormalize within clusters of equal s (eigh returns mixed bases there)
    U, _ = np.linalg.qr(U) if n else (U, None)
    return U, np.clip(s, 0, None)


# ---------------------------------------------------------------- Schur relations

def schur_relation_residuals(b: GrunskyBlocks, U: np.ndarray, D: np.ndarray, side: str = "B1") -> dict:
    """Residuals of the four relations tying the Takagi vectors of B1 (or B4) to the other blocks.

    V = B2^* U / rho is built from the wide strips when present, so it is a
    vector of length `width` rather than N.  side="B4" runs the mirrored set,
    with the roles of (B1, B2, B3, B4) taken by (B4, B3, B2, B1).
    """
    lam = np.asarray(D, float)
    if lam.size and 1 - lam[0] ** 2 < 1e-12:
        raise SingularScaling("1 - lambda_1^2 is too small to rescale")
    rho = np.sqrt(1 - lam**2)
    N = b.N
    if side == "B1":
        X1, X3 = b.B1, b.B3
        rows = None if b.rows is None else (b.rows[1], b.rows[3])  # B2, B4 strips
        sq = (b.B2, b.B4)
    elif side == "B4":
        X1, X3 = b.B4, b.B2
        rows = None if b.rows is None else (b.rows[2], b.rows[0])  # B3, B1 strips
        sq = (b.B3, b.B1)
    else:
        raise ValueError(f"unknown side {side!r}")
    X2, X4 = rows if rows is not None else sq
    V = (X2.conj().T @ U) / rho[None, :]
    Ub = U.conj()  # J U J is entrywise conjugation
    fro = np.linalg.norm
    return {
        "B1 JUJ - UD": float(fro(X1 @ Ub - U * lam)),
        "B3 JUJ - JVJ rho": float(fro(X3 @ Ub - V[:N].conj() * rho)),
        "B2 V - U rho": float(fro(X2 @ V - U * rho)),
        "B4 V + JVJ D": float(fro(X4 @ V + V[:N].conj() * lam)),
        "V unitary": float(fro(V.conj().T @ V - np.eye(V.shape[1]))),
    }


# ---------------------------------------------------------------- spectrum and determinants

def _logdet_hpd(H: np.ndarray) -> float:
    """log det of a Hermitian positive definite matrix by Cholesky."""
    H = (H + H.conj().T) / 2
    try:
        L = np.linalg.cholesky(H)
    except np.linalg.LinAlgError:
        return float("-inf")  # not positive definite at working precision
    return float(2 * np.sum(np.log(np.abs(np.diag(L)))))


@dataclass
class SpectralReport:
    lam: np.ndarray
    rho: np.ndarray
    fredholm_eigs: list
    detF: float
    s2: float
    residuals: dict = field(default_factory=dict)
    block: str = "B1"
    leaks: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "block": self.block,
            "lambda": [float(x) for x in self.lam],
            "rho": [float(x) for x in self.rho],
            "fredholm_eigs": [x if isinstance(x, str) else float(x) for x in self.fredholm_eigs],
            "detF": float(self.detF),
            "s2": float(self.s2),
            "leaks": {k: float(v) for k, v in self.leaks.items()},
            "residuals": {k: float(v) for k, v in self.residuals.items()},
        }


def det_routes(b: GrunskyBlocks) -> dict:
    """log det of I - B1 B1^* and I - B4 B4^*, square and wide-row versions."""
    I = np.eye(b.N)
    out = {
        "logdet_I-B1B1*": _logdet_hpd(I - b.B1 @ b.B1.conj().T),
        "logdet_I-B4B4*": _logdet_hpd(I - b.B4 @ b.B4.conj().T),
    }
    if b.rows is not None:
        r1, r2, r3, r4 = b.rows
        out["logdet_B2B2*_rows"] = _logdet_hpd(r2 @ r2.conj().T)
        out["logdet_B3B3*_rows"] = _logdet_hpd(r3 @ r3.conj().T)
    return out


def truncation_leaks(b: GrunskyBlocks) -> dict:
    """Frobenius mass of rows 1..N of B1 and B4 beyond column N (0 without wide strips)."""
    if b.rows is None:
        return {"B1": 0.0, "B4": 0.0}
    N = b.N
    return {"B1": float(np.linalg.norm(b.rows[0][:, N:])), "B4": float(np.linalg.norm(b.rows[3][:, N:]))}


def fredholm_spectrum(b: GrunskyBlocks, block: str = "auto") -> SpectralReport:
    """Singular values and Det_F from B1 or B4.

    Both blocks share the Fredholm determinant.  With block="auto" the one whose
    rows leak less mass past the truncation is used, which matters when one of
    the two maps is crowded and its Grunsky rows decay slowly.
    """
    leaks = truncation_leaks(b)
    if block == "auto":
        block = "B4" if leaks["B4"] < leaks["B1"] else "B1"
    if block not in ("B1", "B4"):
        raise ValueError(f"unknown block {block!r}")
    B = b.B1 if block == "B1" else b.B4
    U, lam = takagi(B)
    if lam.size and lam[0] >= 1:
        raise NormAtLeastOne(f"largest singular value {lam[0]:.6g} of {block} is not below 1")
    # the precondition is on the pair, so the unused block must pass it too
    other = "B4" if block == "B1" else "B1"
    if b.N and np.linalg.norm(b.B4 if block == "B1" else b.B1, 2) >= 1:
        raise NormAtLeastOne(f"{other} has operator norm at least 1")
    rho = np.sqrt(1 - lam**2)
    log_prod = float(np.sum(np.log1p(-lam**2)))
    routes = det_routes(b)
    res = {
        "prod_vs_B1": abs(np.exp(log_prod) - np.exp(routes["logdet_I-B1B1*"])),
        "prod_vs_B4": abs(np.exp(log_prod) - np.exp(routes["logdet_I-B4B4*"])),
        "B1_vs_B4": abs(np.exp(routes["logdet_I-B1B1*"]) - np.exp(routes["logdet_I-B4B4*"])),
        "takagi_reconstruction": float(np.linalg.norm(B - (U * lam) @ U.T)),
    }
    eigs = []
    for x in lam:
        if x < ZERO_LAMBDA:
            eigs.extend(["inf", "-inf"])
        else:
            eigs.extend([1 / x, -1 / x])
    return SpectralReport(lam, rho, eigs, float(np.exp(log_prod)), log_prod, res, block, leaks)


def det_route_gap(p: NormalizedPair, N: int = 32, tol: float = 1e-8, max_N: int = 128) -> dict:
    """|det(I - B1 B1^*) - det(I - B4 B4^*)| with square blocks, doubling N until it is below tol.

    A crowded interior map gives slowly decaying B1 rows; the square B1 route
    then needs a much larger N than the B4 route, and may not get there by max_N.
    """
    from .faber import grunsky_table

    history = []
    while True:
        b = blocks_from_table(grunsky_table(p, N))
        r = det_routes(b)
        gap = abs(np.exp(r["logdet_I-B1B1*"]) - np.exp(r["logdet_I-B4B4*"]))
        history.append((N, float(gap)))
        if gap <= tol or 2 * N > max_N:
            return {"N": N, "gap": float(gap), "history": history}
        N *= 2


def hs_norm_sq(b: GrunskyBlocks, which: int = 1) -> float:
    B = {1: b.B1, 4: b.B4}[which]
    return float(np.sum(np.abs(B) ** 2))


@dataclass
class PeriodMatrices:
    N_omega: np.ndarray
    N_omega_star: np.ndarray
    det_omega: float
    det_omega_star: float
    residuals: dict


def period_matrices(b: GrunskyBlocks, detF: Optional[float] = None) -> PeriodMatrices:
    """Gram matrices B3 B3^* and B2 B2^* of the Faber 1-form bases."""
    if b.rows is not None:
        r2, r3 = b.rows[1], b.rows[2]
    else:
        r2, r3 = b.B2, b.B3
    No = r3 @ r3.conj().T
    Nos = r2 @ r2.conj().T
    d1 = float(np.exp(_logdet_hpd(No)))
    d2 = float(np.exp(_logdet_hpd(Nos)))
    if detF is None:
        detF = fredholm_spectrum(b).detF
    res = {
        "det_N_omega_vs_detF": abs(d1 - detF),
        "det_N_omega_star_vs_detF": abs(d2 - detF),
        "min_eig_N_omega": float(np.linalg.eigvalsh((No + No.conj().T) / 2).min()),
    }
    return PeriodMatrices(No, Nos, d1, d2, res)


# ---------------------------------------------------------------- vector identities

def reflection_vectors(p: NormalizedPair, t: GrunskyTable, length: Optional[int] = None) -> dict:
    """Coefficient vectors in the orthonormal bases e_n = sqrt(n/pi) z^{n-1}, f_n = sqrt(n/pi) z^{-n-1}.

    Each half has `length` entries (the table order by default).  The
    columns b_{-k,0}, b_{k,0} come from the full log series of the pair, so
    the vectors are not limited by the table.
    """
    L = length or t.order
    n = np.arange(1, L + 1)
    order = max(p.f.order, p.g.order + 1, L + 2)
    F = TaylorSeries(p.f.coeffs[1:]).truncate(order)
    G = p.g.G().truncate(order)
    col_minus = -S.log_nonzero(F).coeffs[1 : L + 1]
    col_plus = -S.log_nonzero(G).coeffs[1 : L + 1]
    sq = np.sqrt(np.pi * n)
    w1 = -sq * col_minus
    w2 = -sq * col_plus
    Af = pre_schwarzian(p.f.truncate(order)).truncate(L - 1).coeffs
    Ag = pre_schwarzian(p.g.truncate(order))
    q = np.zeros(L, complex)
    m = min(L, Ag.coeffs.size)
    q[:m] = Ag.coeffs[:m]
    # z^k = sqrt(pi/(k+1)) e_{k+1} and z^{-k-2} = sqrt(pi/(k+1)) f_{k+1}
    v1 = Af * np.sqrt(np.pi / n)
    v2 = -q * np.sqrt(np.pi / n)
    w = np.concatenate([w1, w2])
    v = np.concatenate([v1, v2])
    return {"w": w, "v": v, "u": v - 2 * w}


def _apply_rows(b: GrunskyBlocks, x: np.ndarray) -> np.ndarray:
    """Leading 2N entries of K x for x = (x1, x2), using the wide strips when present."""
    h = x.size // 2
    x1, x2 = x[:h], x[h:]
    if b.rows is None:
        r1, r2, r3, r4 = b.B1, b.B2, b.B3, b.B4
    else:
        r1, r2, r3, r4 = b.rows
    k = min(h, r1.shape[1])
    return np.concatenate([r1[:, :k] @ x1[:k] + r2[:, :k] @ x2[:k],
                           r3[:, :k] @ x1[:k] + r4[:, :k] @ x2[:k]])


def reflection_residuals(p: NormalizedPair, t: GrunskyTable, b: Optional[GrunskyBlocks] = None) -> dict:
    b = b or blocks_from_table(t)
    N = b.N
    width = b.rows[0].shape[1] if b.rows is not None else N
    vec = reflection_vectors(p, t, width)
    w, v, u = vec["w"], vec["v"], vec["u"]
    head = lambda x: np.concatenate([x[:N], x[width : width + N]])  # noqa: E731
    nrm = np.linalg.norm
    return {
        "Kwbar-w": float(nrm(_apply_rows(b, w.conj()) - head(w))),
        "Kubar+v": float(nrm(_apply_rows(b, u.conj()) + head(v))),
        "Kvbar+u": float(nrm(_apply_rows(b, v.conj()) + head(u))),
    }


# ---------------------------------------------------------------- Brazilevic functional

@dataclass
class BrazilevicReport:
    grid: np.ndarray
    F: np.ndarray
    supF: float
    opnorm: float
    lhs: np.ndarray  # (1 - |z|^2)^2 |S(f1) - S(f2)|
    margins: np.ndarray  # 6 F - lhs
    norm_margin: float  # 6 opnorm - 6 supF


def brazilevic(p1: NormalizedPair, p2: NormalizedPair, grid: Sequence[complex],
               N: int = 48) -> BrazilevicReport:
    """F(z)^2 = (1-|z|^2)^2 sum_m m |sum_n n db_{-n,-m} z^{n-1}|^2 on a grid in the disk."""
    z = np.asarray(grid, dtype=complex).ravel()
    if np.any(np.abs(z) >= 1):
        raise ValueError("grid points must lie in the unit disk")
    d = interior_block(p1.f, N) - interior_block(p2.f, N)
    n = np.arange(1, N + 1)
    Zp = z[:, None] ** (n - 1)[None, :]  # z^{n-1}
    inner = Zp @ (n[:, None] * d)  # [z, m] = sum_n n db_{-n,-m} z^{n-1}
    F = (1 - np.abs(z) ** 2) * np.sqrt(np.sum(n[None, :] * np.abs(inner) ** 2, axis=1))
    dB1 = np.sqrt(np.outer(n, n)) * d
    opnorm = float(np.linalg.norm(dB1, 2))
    S1, S2 = schwarzian(p1.f), schwarzian(p2.f)
    lhs = (1 - np.abs(z) ** 2) ** 2 * np.abs(S.evaluate(S1, z) - S.evaluate(S2, z))
    margins = 6 * F - lhs
    supF = float(F.max()) if F.size else 0.0
    return BrazilevicReport(z, F, supF, opnorm, lhs, margins, 6 * opnorm - 6 * supF)


# ---------------------------------------------------------------- Siegel disk and Hirota

def siegel_membership(Z: np.ndarray) -> dict:
    Z = np.asarray(Z, dtype=complex)
    n = Z.shape[0]
    H = np.eye(n) - Z @ Z.conj()
    H = (H + H.conj().T) / 2
    mn = float(np.linalg.eigvalsh(H).min()) if n else 1.0
    sym = float(np.linalg.norm(Z - Z.T))
    return {
        "symmetry": sym,
        "min_eig": mn,
        "hs_norm": float(np.linalg.norm(Z)),
        "member": bool(mn > 0 and sym <= 1e-8 * max(1.0, np.linalg.norm(Z))),
    }


def _bexp(a: np.ndarray) -> np.ndarray:
    """exp of a bivariate series with zero constant term, truncated to the array shape."""
    from .faber import _bmul

    out = np.zeros_like(a)
    out[0, 0] = 1
    term = out.copy()
    for k in range(1, sum(a.shape)):
        term = _bmul(term, a) / k
        if not np.any(term):
            break
        out += term
    return out


def hirota_s1(C: np.ndarray, k: int) -> float:
    """max coefficient mismatch, total degree <= k, of
    1 - z1 z2 sum_m (C_m1/sqrt(m)) h_{m-1}(z1, z2) = exp(-sum C_mn/sqrt(mn) z1^m z2^n)."""
    n = np.arange(1, k + 1)
    c = np.zeros((k + 1, k + 1), complex)
    c[1:, 1:] = -C[:k, :k] / np.sqrt(np.outer(n, n))
    rhs = _bexp(c)
    lhs = np.zeros_like(rhs)
    lhs[0, 0] = 1
    for m in range(1, k + 1):
        coef = C[m - 1, 0] / np.sqrt(m)  # b_{-m,-1}
        for i in range(m):
            if i + 1 <= k and m - i <= k:
                lhs[i + 1, m - i] -= coef
    deg = np.add.outer(np.arange(k + 1), np.arange(k + 1))
    mask = deg <= k
    return float(np.max(np.abs(lhs - rhs)[mask]))


def hirota_residuals(b: GrunskyBlocks, k: int = 8) -> dict:
    if k > 12:
        raise ValueError("Hirota checks are limited to total degree 12")
    k = min(k, b.N)
    # B1 conj(B1) = B1 B1^* by symmetry, so S2 is a unitarity line; wide strips carry the inner sums
    BBs, _ = _row_products(b)
    fro = np.linalg.norm
    return {
        "S1": hirota_s1(b.B1, k),
        "S3": hirota_s1(b.B4, k),
        "S2_interior": float(fro(BBs["11"])),
        "S2_exterior": float(fro(BBs["33"])),
    }
