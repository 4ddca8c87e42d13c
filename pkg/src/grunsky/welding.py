"""Numerical conformal welding for analytic star-shaped curves.

Interior and exterior Riemann maps come from Theodorsen's fixed point
equation with FFT conjugation.  The welding homeomorphism is the composition
of the interior boundary correspondence with the inverse of the exterior one,
and the period matrices of a circle map are assembled from FFTs of its powers.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg as sla
from scipy.interpolate import PchipInterpolator

from . import series as S
from .errors import (AliasingSuspected, IllConditioned, MonotonicityLost, NoConvergence,
                     TheodorsenConditionViolated)
from .faber import GrunskyTable
from .pair import NormalizedPair
from .series import ExteriorSeries, TaylorSeries

log = logging.getLogger(__name__)

THEODORSEN_LIMIT = 0.95
RELAX_THRESHOLD = 0.7
RELAX_FACTOR = 0.5
# near-Nyquist Fourier coefficients of the correspondence above this trigger a finer solve
SPECTRAL_TAIL_TOL = 1e-14
MAX_SOLVER_GRID = 1 << 16
ALIAS_ENERGY_TOL = 1e-8
# square sections of the period matrices are poorly conditioned yet their leading blocks are fine
COND_LIMIT = 1e14


# ---------------------------------------------------------------- curves

@dataclass(frozen=True)
class CurveSpec:
    """Polar curve with radius exp(eps0 + sum_k alpha_k cos k phi + beta_k sin k phi)."""

    eps0: float = 0.0
    alpha: tuple = ()
    beta: tuple = ()
    name: str = ""

    def __post_init__(self):
        K = max(len(self.alpha), len(self.beta))
        a = tuple(float(x) for x in self.alpha) + (0.0,) * (K - len(self.alpha))
        b = tuple(float(x) for x in self.beta) + (0.0,) * (K - len(self.beta))
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)
        object.__setattr__(self, "eps0", float(self.eps0))

    @property
    def K(self) -> int:
        return len(self.alpha)

    @property
    def limit(self) -> float:
        return THEODORSEN_LIMIT

    explicit_exterior = None

    def log_radius(self, phi):
        phi = np.asarray(phi, dtype=float)
        out = np.full(phi.shape, self.eps0)
        for k, (a, b) in enumerate(zip(self.alpha, self.beta), start=1):
            out = out + a * np.cos(k * phi) + b * np.sin(k * phi)
        return out

    def dlog_radius(self, phi):
        phi = np.asarray(phi, dtype=float)
        out = np.zeros(phi.shape)
        for k, (a, b) in enumerate(zip(self.alpha, self.beta), start=1):
            out = out + k * (b * np.cos(k * phi) - a * np.sin(k * phi))
        return out

    def theodorsen_constant(self, n: int = 8192) -> float:
        phi = 2 * np.pi * np.arange(n) / n
        return float(np.max(np.abs(self.dlog_radius(phi)))) if self.K else 0.0

    def to_json(self) -> dict:
        return {"eps0": self.eps0, "alpha": list(self.alpha), "beta": list(self.beta)}

    @classmethod
    def from_json(cls, d: dict) -> "CurveSpec":
        return cls(d.get("eps0", 0.0), tuple(d.get("alpha", ())), tuple(d.get("beta", ())),
                   d.get("name", ""))


@dataclass(frozen=True)
class EllipseCurve:
    """Image of the unit circle under z + t/z, semi-axes 1 + t and 1 - t (negative t swaps them)."""

    t: float
    name: str = ""
    # with under-relaxation the iteration converges well past the plain guard
    limit: float = 1.5

    def __post_init__(self):
        if not -1 < self.t < 1:
            raise ValueError("ellipse parameter must lie in (-1, 1)")

    @property
    def explicit_exterior(self) -> ExteriorSeries:
        return ExteriorSeries(1.0, 0.0, [self.t])

    def log_radius(self, phi):
        A, B = 1 + self.t, 1 - self.t
        c, s = np.cos(phi), np.sin(phi)
        return -0.5 * np.log(c * c / A**2 + s * s / B**2)

    def dlog_radius(self, phi):
        A, B = 1 + self.t, 1 - self.t
        c, s = np.cos(phi), np.sin(phi)
        q = c * c / A**2 + s * s / B**2
        return -c * s * (1 / B**2 - 1 / A**2) / q

    def theodorsen_constant(self, n: int = 8192) -> float:
        A, B = 1 + self.t, 1 - self.t
        return abs(A * A - B * B) / (2 * A * B)

    def to_json(self) -> dict:
        return {"ellipse": self.t}


@dataclass(frozen=True, eq=False)
class ImageCurve:
    """Boundary of f(D) for an explicit normalized polynomial f, assumed star-shaped about 0."""

    f: TaylorSeries
    name: str = ""
    limit: float = 1.5

    @property
    def explicit_interior(self) -> TaylorSeries:
        return self.f

    def _theta(self, phi):
        """Solve arg f(e^{i theta}) = phi on the lift."""
        corr = ExplicitInteriorCorrespondence(self.f)
        return corr.inverse(np.asarray(phi, dtype=float))

    def log_radius(self, phi):
        th = self._theta(phi)
        return np.log(np.abs(S.evaluate(self.f, np.exp(1j * th))))

    def dlog_radius(self, phi):
        th = self._theta(phi)
        z = np.exp(1j * th)
        q = z * S.evaluate(S.derivative(self.f), z) / S.evaluate(self.f, z)
        # along the circle d log|f| = -Im(q) d theta and d arg f = Re(q) d theta
        return -np.imag(q) / np.real(q)

    def theodorsen_constant(self, n: int = 8192) -> float:
        phi = 2 * np.pi * np.arange(n) / n
        return float(np.max(np.abs(self.dlog_radius(phi))))

    def to_json(self) -> dict:
        return {"image_of": S.to_literal(self.f)}


# ---------------------------------------------------------------- boundary correspondences

def conjugate(u: np.ndarray) -> np.ndarray:
    """Circle conjugate function (periodic Hilbert transform) of real samples."""
    M = u.size
    k = np.fft.fftfreq(M, 1.0 / M)
    return np.real(np.fft.ifft(-1j * np.sign(k) * np.fft.fft(u)))


@dataclass(frozen=True, eq=False)
class Correspondence:
    """A lifted circle map theta -> theta + p(theta) with p a trigonometric polynomial."""

    coeffs: np.ndarray  # complex Fourier coefficients of p, frequencies 0..K (real signal)

    @classmethod
    def from_samples(cls, values: np.ndarray, trim: float = 1e-16) -> "Correspondence":
        M = values.size
        theta = 2 * np.pi * np.arange(M) / M
        c = np.fft.rfft(values - theta) / M
        c[1:] *= 2
        if M % 2 == 0:
            c[-1] /= 2
        keep = np.nonzero(np.abs(c) > trim * max(1.0, np.abs(c).max()))[0]
        K = int(keep.max()) + 1 if keep.size else 1
        return cls(c[:K].copy())

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return x + self._eval(x, 0)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        return 1.0 + self._eval(x, 1)

    def _eval(self, x, d):
        k = np.arange(self.coeffs.size)
        c = self.coeffs * (1j * k) ** d
        out = np.empty(x.shape)
        flat = x.ravel()
        res = out.ravel()
        step = max(1, 2_000_000 // max(1, k.size))
        for s in range(0, flat.size, step):
            xs = flat[s : s + step]
            res[s : s + step] = np.real(np.exp(1j * np.outer(xs, k)) @ c)
        return res.reshape(x.shape)

    def inverse(self, y, tol: float = 1e-14, maxiter: int = 30):
        """Solve self(x) = y by monotone cubic interpolation and Newton polishing."""
        y = np.asarray(y, dtype=float)
        nc = getattr(self, "coeffs", None)
        M = max(1024, 8 * (nc.size if nc is not None else 256))
        grid = 2 * np.pi * np.arange(M + 1) / M
        vals = self(grid)
        if np.any(np.diff(vals) <= 0):
            raise MonotonicityLost("boundary correspondence is not strictly increasing")
        # the lift of the inverse, sampled and extended periodically
        y0 = vals[0]
        shift = np.floor((y - y0) / (2 * np.pi))
        yr = y - 2 * np.pi * shift
        x = PchipInterpolator(vals, grid)(yr)
        prev = np.inf
        for _ in range(maxiter):
            dx = (self(x) - yr) / self.derivative(x)
            x = x - dx
            step = np.max(np.abs(dx), initial=0.0)
            # stop once converged or once rounding makes the step stall
            if step <= tol or step >= prev:
                break
            prev = step
        return x + 2 * np.pi * shift


@dataclass(frozen=True, eq=False)
class ExplicitCorrespondence:
    """psi -> arg g(e^{i psi}) for an explicit exterior series, lifted."""

    g: ExteriorSeries

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        z = np.exp(1j * x)
        G = self.g.G()
        # arg g(z) = psi + arg G(1/z); the catalog maps keep G(1/z)/b in the right half plane
        return x + np.angle(self.g.b) + np.angle(S.evaluate(G, 1 / z) / self.g.b)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        z = np.exp(1j * x)
        return np.real(z * self.g.derivative_at(z) / self.g(z))

    inverse = Correspondence.inverse


@dataclass(frozen=True, eq=False)
class ExplicitInteriorCorrespondence:
    """theta -> arg f(e^{i theta}) for an explicit interior series, lifted."""

    f: TaylorSeries

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        z = np.exp(1j * x)
        F = TaylorSeries(self.f.coeffs[1:])  # f = z F, F(0) = f'(0)
        return x + np.angle(S.evaluate(F, z) / F.coeffs[0]) + np.angle(F.coeffs[0])

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        z = np.exp(1j * x)
        return np.real(z * S.evaluate(S.derivative(self.f), z) / S.evaluate(self.f, z))

    inverse = Correspondence.inverse


@dataclass(frozen=True, eq=False)
class CircleMap:
    """Samples of a lifted increasing circle map at theta_j = 2 pi j / M."""

    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float).copy()
        M = s.size
        if M < 2 or M & (M - 1):
            raise ValueError("CircleMap needs a power-of-two sample count")
        ext = np.append(s, s[0] + 2 * np.pi)
        if np.any(np.diff(ext) <= 0):
            raise MonotonicityLost("circle map samples are not strictly increasing")
        s.flags.writeable = False
        object.__setattr__(self, "samples", s)

    @property
    def M(self) -> int:
        return self.samples.size

    @classmethod
    def identity(cls, M: int = 4096) -> "CircleMap":
        return cls(2 * np.pi * np.arange(M) / M)

    @classmethod
    def rotation(cls, alpha: float, M: int = 4096) -> "CircleMap":
        return cls(2 * np.pi * np.arange(M) / M + alpha)

    @classmethod
    def mobius(cls, a: complex, alpha: float = 0.0, M: int = 4096) -> "CircleMap":
        """theta -> arg of e^{i alpha} (z - a) / (1 - conj(a) z) at z = e^{i theta}."""
        if abs(a) >= 1:
            raise ValueError("Mobius parameter must lie in the unit disk")
        th = 2 * np.pi * np.arange(M) / M
        return cls(alpha + th + 2 * np.angle(1 - a * np.exp(-1j * th)))

    def to_json(self) -> dict:
        return {"M": self.M, "samples": [float(x) for x in self.samples]}

    @classmethod
    def from_json(cls, d: dict) -> "CircleMap":
        c = cls(np.asarray(d["samples"], float))
        if "M" in d and int(d["M"]) != c.M:
            raise ValueError("CircleMap M does not match the sample count")
        return c


# ---------------------------------------------------------------- Theodorsen solves

@dataclass
class MapSolution:
    series: object  # TaylorSeries for the interior map, ExteriorSeries for the exterior one
    correspondence: object
    samples: np.ndarray  # correspondence on the solver grid
    grid: int
    iterations: int
    self_residual: float
    spectral_tail: float


def _theodorsen(curve, M: int, sign: float, tol: float, maxiter: int, start=None):
    theta = 2 * np.pi * np.arange(M) / M
    omega = RELAX_FACTOR if curve.theodorsen_constant() > RELAX_THRESHOLD else 1.0
    phi = theta.copy() if start is None else start
    for it in range(1, maxiter + 1):
        new = theta + sign * conjugate(curve.log_radius(phi))
        step = np.max(np.abs(new - phi))
        phi = phi + omega * (new - phi)
        if step <= tol:
            return phi, it
    raise NoConvergence(f"Theodorsen iteration did not reach {tol:g} in {maxiter} steps (last step {step:.3g})")


def _upsample(phi: np.ndarray, factor: int) -> np.ndarray:
    M = phi.size
    theta = 2 * np.pi * np.arange(M) / M
    c = np.fft.fft(phi - theta)
    big = np.zeros(M * factor, complex)
    h = M // 2
    big[:h] = c[:h]
    big[-h + 1 :] = c[-h + 1 :]
    big[h] = c[h] / 2
    big[-h] = c[h] / 2
    fine = np.real(np.fft.ifft(big)) * factor
    return fine + 2 * np.pi * np.arange(M * factor) / (M * factor)


def _near_nyquist(phi: np.ndarray) -> float:
    M = phi.size
    c = np.abs(np.fft.rfft(phi - 2 * np.pi * np.arange(M) / M)) / M
    return float(c[3 * M // 8 :].max())


def _check_curve(curve):
    const = curve.theodorsen_constant()
    if const > curve.limit:
        raise TheodorsenConditionViolated(
            f"Theodorsen constant {const:.3g} exceeds the guard {curve.limit:g}")


def _solve(curve, M, sign, tol, maxiter, refine):
    _check_curve(curve)
    Ms = M
    phi, its = _theodorsen(curve, Ms, sign, tol, maxiter)
    tail = _near_nyquist(phi)
    while refine and tail > SPECTRAL_TAIL_TOL and Ms < MAX_SOLVER_GRID:
        Ms *= 2
        phi, more = _theodorsen(curve, Ms, sign, tol, maxiter, start=_upsample(phi, 2))
        its += more
        tail = _near_nyquist(phi)
        log.debug("Theodorsen refined to %d points, tail %.3g", Ms, tail)
    return phi, Ms, its, tail


def interior_map(curve, N: int = 64, M: int = 4096, tol: float = 1e-12, maxiter: int = 200,
                 refine: bool = True) -> MapSolution:
    """Riemann map of the disk onto the inside of the curve, f(0) = 0 and f'(0) > 0.

    The solver grid starts at M points and doubles while the correspondence
    still has Fourier content near the Nyquist frequency, so crowded maps are
    resolved even when M is small.  `N` is a floor on the series order kept.
    """
    f_exp = getattr(curve, "explicit_interior", None)
    if f_exp is not None:
        corr = ExplicitInteriorCorrespondence(f_exp)
        theta = 2 * np.pi * np.arange(M) / M
        resid = _self_residual(curve, S.evaluate, f_exp, M)
        return MapSolution(f_exp, corr, corr(theta), M, 0, resid, 0.0)
    phi, Ms, its, tail = _solve(curve, M, +1.0, tol, maxiter, refine)
    theta = 2 * np.pi * np.arange(Ms) / Ms
    # log(f(z)/z) on the circle; keep its analytic part and rebuild f
    ell = curve.log_radius(phi) + 1j * (phi - theta)
    c = np.fft.fft(ell) / Ms
    c[Ms // 2 :] = 0
    fb = np.exp(1j * theta) * np.exp(np.fft.ifft(c) * Ms)
    a = np.fft.fft(fb) / Ms
    K = max(N, Ms // 2)
    coeffs = np.zeros(K + 1, complex)
    n = min(K + 1, Ms // 2)
    coeffs[1:n] = a[1:n]
    coeffs[1] = coeffs[1].real  # f'(0) = exp(mean log rho) is real
    f = TaylorSeries(_trim(coeffs, keep=N + 1))
    resid = _self_residual(curve, S.evaluate, f, Ms)
    corr = Correspondence.from_samples(phi)
    return MapSolution(f, corr, phi, Ms, its, resid, tail)


def exterior_map(curve, N: int = 64, M: int = 4096, tol: float = 1e-12, maxiter: int = 200,
                 refine: bool = True) -> MapSolution:
    """Riemann map of the exterior disk onto the outside of the curve, g'(infinity) > 0."""
    g_exp = getattr(curve, "explicit_exterior", None)
    if g_exp is not None:
        corr = ExplicitCorrespondence(g_exp)
        theta = 2 * np.pi * np.arange(M) / M
        resid = _self_residual(curve, S.evaluate, g_exp, M)
        return MapSolution(g_exp, corr, corr(theta), M, 0, resid, 0.0)
    phi, Ms, its, tail = _solve(curve, M, -1.0, tol, maxiter, refine)
    psi = 2 * np.pi * np.arange(Ms) / Ms
    gb = np.exp(curve.log_radius(phi) + 1j * phi)
    a = np.fft.fft(gb) / Ms
    K = max(N, Ms // 2 - 2)
    b = a[1].real
    tail_c = np.zeros(K, complex)
    n = min(K, Ms // 2 - 2)
    tail_c[:n] = a[(-np.arange(1, n + 1)) % Ms]
    tail_c = _trim(tail_c, keep=N, scale=abs(b))
    g = ExteriorSeries(b, a[0], tail_c)
    resid = _self_residual(curve, S.evaluate, g, Ms)
    corr = Correspondence.from_samples(phi)
    del psi
    return MapSolution(g, corr, phi, Ms, its, resid, tail)


def _trim(c: np.ndarray, keep: int, rel: float = 1e-16, scale: float | None = None) -> np.ndarray:
    scale = np.abs(c).max() if scale is None else scale
    big = np.nonzero(np.abs(c) > rel * scale)[0]
    n = max(keep, int(big.max()) + 1 if big.size else 1)
    return c[:n]


def _self_residual(curve, ev, s, M: int) -> float:
    """sup | |s(e^{i theta})| - rho(arg s(e^{i theta})) | on a grid offset from the solver's."""
    th = 2 * np.pi * (np.arange(M) + 0.5) / M
    w = ev(s, np.exp(1j * th))
    return float(np.max(np.abs(np.abs(w) - np.exp(curve.log_radius(np.angle(w))))))


def normalize_pair(f_raw: TaylorSeries, g_raw: ExteriorSeries, label: str = "") -> NormalizedPair:
    """Post-compose both maps with z -> z / f_raw'(0)."""
    r = f_raw.coeffs[1]
    if r == 0:
        raise ValueError("f_raw'(0) must be nonzero")
    c = f_raw.coeffs / r
    c[1] = 1.0
    c[0] = 0.0
    g = ExteriorSeries(g_raw.b / r, g_raw.b0 / r, g_raw.tail / r)
    return NormalizedPair(TaylorSeries(c), g, label)


def welding_homeomorphism(phi_int, phi_ext, M: int = 4096, int_samples: np.ndarray | None = None) -> CircleMap:
    """gamma = phi_ext^{-1} o phi_int sampled at M uniform points."""
    theta = 2 * np.pi * np.arange(M) / M
    if int_samples is not None:
        step = int_samples.size // M
        y = int_samples[::step][:M]
    else:
        y = phi_int(theta)
    if np.any(np.diff(np.append(y, y[0] + 2 * np.pi)) <= 0):
        raise MonotonicityLost("interior correspondence is not strictly increasing")
    return CircleMap(phi_ext.inverse(y))


@dataclass
class WeldResult:
    pair: NormalizedPair
    gamma: CircleMap
    interior: MapSolution
    exterior: MapSolution
    curve: object = None

    @property
    def diagnostics(self) -> dict:
        return {
            "interior_grid": self.interior.grid,
            "interior_iterations": self.interior.iterations,
            "interior_self_residual": self.interior.self_residual,
            "exterior_grid": self.exterior.grid,
            "exterior_iterations": self.exterior.iterations,
            "exterior_self_residual": self.exterior.self_residual,
            "conformal_radius": float(self.interior.series.coeffs[1].real),
        }


def weld(curve, N: int = 64, M: int = 4096, tol: float = 1e-12, maxiter: int = 200,
         refine: bool = True, label: str = "") -> WeldResult:
    inner = interior_map(curve, N, M, tol, maxiter, refine)
    outer = exterior_map(curve, N, M, tol, maxiter, refine)
    pair = normalize_pair(inner.series, outer.series, label or getattr(curve, "name", ""))
    gamma = welding_homeomorphism(inner.correspondence, outer.correspondence, M,
                                  int_samples=inner.samples if inner.grid % M == 0 else None)
    return WeldResult(pair, gamma, inner, outer, curve)


# ---------------------------------------------------------------- catalog

def catalog() -> dict:
    """Named test curves; Mobius entries are circle maps rather than curves."""
    cat = {"circle": CurveSpec(name="circle")}
    for t in (0.1, 0.3, 0.5):
        cat[f"ellipse-{t}"] = EllipseCurve(t, name=f"ellipse-{t}")
    for k in (2, 3):
        for eps in (0.05, 0.1):
            alpha = [0.0] * (k - 1) + [eps]
            cat[f"cos{k}-{eps}"] = CurveSpec(0.0, tuple(alpha), (), name=f"cos{k}-{eps}")
    return cat


MOBIUS_CATALOG = {"mobius-0.3": (0.3, 0.0), "mobius-0.5i": (0.5j, 0.7), "mobius-0.2-0.4i": (0.2 - 0.4j, -1.1)}


# ---------------------------------------------------------------- period matrices

@dataclass(frozen=True, eq=False)
class KynsMatrices:
    """Square K x K sections of the period matrices; N is the size handed to callers."""

    A: np.ndarray
    B: np.ndarray
    M: int
    N: int
    cond: float
    alias_energy: float

    @property
    def inner(self) -> int:
        return self.A.shape[0]


def kyns_matrices(gamma: CircleMap, N: int, inner: Optional[int] = None,
                  check_alias: bool = True) -> KynsMatrices:
    """A_mn = sqrt(m/n) [gamma^n]_m and B_mn = sqrt(m/n) [gamma^{-n}]_m for m, n <= inner.

    Inverting a square section gives accurate leading blocks only when the inner
    size exceeds N by enough for the rows m <= N to have decayed.
    """
    M = gamma.M
    K = inner or N
    if K < N:
        raise ValueError("inner size below N")
    if M < 4 * K:
        raise ValueError("need at least 4 samples per retained power")
    n = np.arange(1, K + 1)
    freq = np.fft.fftfreq(M, 1.0 / M)
    far = np.abs(freq) > M // 4
    Fp = np.empty((K, K), dtype=complex)
    Fm = np.empty((K, K), dtype=complex)
    tail = 0.0
    step = max(1, (1 << 22) // M)  # chunk the powers to bound memory
    for lo in range(0, K, step):
        hi = min(K, lo + step)
        E = np.exp(1j * np.outer(n[lo:hi], gamma.samples))
        P = np.fft.fft(E, axis=1) / M
        Q = np.fft.fft(np.conj(E), axis=1) / M
        Fp[lo:hi] = P[:, 1 : K + 1]
        Fm[lo:hi] = Q[:, 1 : K + 1]
        if lo < N:
            # the leakage test runs on the N powers whose blocks are reported
            r = slice(0, min(hi, N) - lo)
            energy = np.sum(np.abs(P[r]) ** 2, axis=1)
            tail = max(tail, np.max(np.sum(np.abs(P[r][:, far]) ** 2, axis=1) / energy),
                       np.max(np.sum(np.abs(Q[r][:, far]) ** 2, axis=1) / energy))
    if check_alias and tail > ALIAS_ENERGY_TOL:
        raise AliasingSuspected(f"FFT tail energy ratio {tail:.3g} with M = {M}")
    w = np.sqrt(n[:, None] / n[None, :])  # sqrt(m / n), rows m, columns n
    A = w * Fp.T
    B = w * Fm.T
    cond = float(np.linalg.cond(A))
    return KynsMatrices(A, B, M, N, cond, float(tail))


def blocks_from_kyns(k: KynsMatrices, N: Optional[int] = None, check_cond: bool = True):
    """Grunsky blocks from the period matrices; the leading N x N parts are returned."""
    from .operators import GrunskyBlocks

    if check_cond and k.cond > COND_LIMIT:
        raise IllConditioned(f"condition number {k.cond:.3g} above {COND_LIMIT:g}")
    Abar = np.conj(k.A)
    lu = sla.lu_factor(Abar)
    I = np.eye(k.inner)
    B3 = sla.lu_solve(lu, I)
    B2 = sla.lu_solve(lu, I, trans=1)  # (A^*)^{-1} = (conj(A)^T)^{-1}
    B1 = sla.lu_solve(lu, k.B.T, trans=1).T
    B4 = -sla.lu_solve(lu, np.conj(k.B)).T
    N = N or k.N
    sl = slice(0, N)
    return GrunskyBlocks(B1[sl, sl], B2[sl, sl], B3[sl, sl], B4[sl, sl], source="kyns")


def kyns_blocks(gamma: CircleMap, N: int, tol: float = 1e-10, check_alias: bool = True,
                max_inner: int = 2048):
    """Double the inner size from 4N until the leading B1 settles.

    Returns (blocks, KynsMatrices, change).  change is the Frobenius difference
    of B1 between the returned inner size and its predecessor; when no
    pair settles below tol the most stable pair is returned.
    """
    K = 4 * N
    prev = None
    best = None
    while 4 * K <= gamma.M and K <= max_inner:
        km = kyns_matrices(gamma, N, inner=K, check_alias=check_alias)
        # the section condition number blows up with K although the leading blocks converge,
        # so stabilisation under doubling is the accuracy test here
        bl = blocks_from_kyns(km, N, check_cond=False)
        if prev is not None:
            change = float(np.linalg.norm(bl.B1 - prev[0].B1))
            if best is None or change < best[2]:
                best = (prev[0], prev[1], change)
            if change < tol:
                break
        prev = (bl, km)
        K *= 2
    if best is None:
        if prev is None:
            raise ValueError(f"M = {gamma.M} too small for N = {N}")
        best = (prev[0], prev[1], np.inf)
    return best


def symplectic_residuals(k: KynsMatrices, N: Optional[int] = None) -> dict:
    """Leading N x N parts of AA^* - BB^* - I and AB^t - BA^t, inner sums over the full section."""
    N = N or k.N
    A, B = k.A[:N], k.B[:N]
    return {
        "AAstar_minus_BBstar": float(np.linalg.norm(A @ A.conj().T - B @ B.conj().T - np.eye(N))),
        "ABt_minus_BAt": float(np.linalg.norm(A @ B.T - B @ A.T)),
    }


# ---------------------------------------------------------------- Grassmannian picture

@dataclass
class GrassmannBasis:
    coords: np.ndarray  # column n holds w_n in the basis (f_1..f_N, e_1..e_N)
    pr_plus: np.ndarray
    pr_minus: np.ndarray
    hs_norm: float
    gram: np.ndarray


def grassmann_basis(t: GrunskyTable, N: Optional[int] = None) -> GrassmannBasis:
    """w_n = f_n + sum_m sqrt(nm) b_{-n,-m} e_m for n <= N."""
    N = N or t.order
    n = np.arange(1, N + 1)
    B1 = np.sqrt(np.outer(n, n)) * t.Bmm[:N, :N]
    coords = np.vstack([np.eye(N), B1.T])
    gram = coords.T @ coords.conj()  # [m, n] = <w_m, w_n> = I + B1^T conj(B1)
    return GrassmannBasis(coords, np.eye(N), B1, float(np.linalg.norm(B1)), gram)
