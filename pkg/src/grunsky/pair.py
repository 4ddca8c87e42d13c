"""Normalized interior/exterior pairs and the pointwise objects attached to them."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import series as S
from .errors import DomainViolation, VanishingDerivative
from .series import ExteriorSeries, TaylorSeries

DELTA_SWITCH = 1e-3
NORMALIZATION_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ExteriorDifferential:
    """sum_k c_k z^{-(k + shift)} on the exterior disk.

    Pre-Schwarzians of exterior maps live here with shift 2, Schwarzians with
    shift 4.  Under z -> 1/z the exterior norms become the interior ones on
    sum_k c_k z^k, which is how the A21 and A2 mirrors are computed.
    """

    coeffs: np.ndarray
    shift: int

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=complex)).copy()
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        x = 1.0 / z
        return x**self.shift * S._horner(self.coeffs, x)

    @property
    def as_taylor(self) -> TaylorSeries:
        return TaylorSeries(self.coeffs)


@dataclass(frozen=True, eq=False)
class NormalizedPair:
    f: TaylorSeries
    g: ExteriorSeries
    label: str = ""
    meta: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        c = self.f.coeffs
        if c.size < 2:
            raise ValueError("f must have order at least 1")
        if abs(c[0]) > NORMALIZATION_TOL or abs(c[1] - 1) > NORMALIZATION_TOL:
            raise ValueError("f must satisfy f(0) = 0 and f'(0) = 1")

    @property
    def b(self) -> complex:
        return self.g.b

    @classmethod
    def identity(cls, order: int = S.DEFAULT_ORDER, b: complex = 1.0) -> "NormalizedPair":
        return cls(TaylorSeries.identity(order), ExteriorSeries.identity(order, b), "identity")


@dataclass(frozen=True, eq=False)
class DModelPair:
    """Pair conjugated by 1/z: f_star on the exterior disk, g_star on the disk."""

    f_star: ExteriorSeries
    g_star: TaylorSeries

    def __post_init__(self):
        if abs(self.f_star.b - 1) > NORMALIZATION_TOL:
            raise ValueError("f_star must have leading coefficient 1")
        if abs(self.g_star.coeffs[0]) > NORMALIZATION_TOL:
            raise ValueError("g_star must vanish at 0")


# ---------------------------------------------------------------- JSON

def pair_to_json(p: NormalizedPair) -> dict:
    return {"f": S.to_literal(p.f), "g": S.to_literal(p.g), "label": p.label}


def pair_from_json(d: dict) -> NormalizedPair:
    f = S.from_literal(d["f"])
    g = S.from_literal(d["g"])
    if not isinstance(f, TaylorSeries) or not isinstance(g, ExteriorSeries):
        raise ValueError("pair needs a taylor f and an exterior g")
    return NormalizedPair(f, g, d.get("label", ""))


def working_order(p: NormalizedPair) -> int:
    """Order for non-polynomial operations on a pair; the stored series are exact polynomials."""
    return max(p.f.order, p.g.order + 1, S.PAD_ORDER)


# ---------------------------------------------------------------- pre-Schwarzian and friends

def _exterior_h(g: ExteriorSeries) -> TaylorSeries:
    # g(z) = z G(x) with x = 1/z, so g'(z) = G(x) - x G'(x) =: H(x)
    G = g.G()
    k = np.arange(G.coeffs.size)
    return TaylorSeries((1 - k) * G.coeffs)


def pre_schwarzian(h):
    """f''/f' as a Taylor series, or g''/g' as an ExteriorDifferential of shift 2."""
    if isinstance(h, TaylorSeries):
        d1 = S.derivative(h)
        if d1.coeffs[0] == 0:
            raise VanishingDerivative("f'(0) = 0")
        if d1.order == 0:
            return TaylorSeries([0.0])
        d2 = S.derivative(d1)
        return S.div(d2, d1.truncate(d2.order))
    if isinstance(h, ExteriorSeries):
        H = _exterior_h(h)
        if H.coeffs[0] == 0:
            raise VanishingDerivative("g'(infinity) = 0")
        if H.order == 0:
            return ExteriorDifferential([0.0], 2)
        # g''(z) = -x^2 H'(x), so g''/g' = sum q_k x^{k+2} with q = -H'/H
        q = -S.div(S.derivative(H), H.truncate(H.order - 1))
        return ExteriorDifferential(q.coeffs, 2)
    raise TypeError(f"unsupported series type {type(h).__name__}")


def psi_map(psi):
    """Psi(psi) = psi_z - psi^2 / 2."""
    if isinstance(psi, TaylorSeries):
        if psi.order == 0:
            return TaylorSeries([-0.5 * psi.coeffs[0] ** 2])
        d = S.derivative(psi)
        return d - 0.5 * S.mul(psi.truncate(d.order), psi.truncate(d.order))
    if isinstance(psi, ExteriorDifferential):
        s = psi.shift
        q = psi.coeffs
        n = q.size
        # d/dz x^{k+s} = -(k+s) x^{k+s+1}; psi^2 carries x^{k+2s}
        out = np.zeros(n, complex)
        out[:n] = -(np.arange(n) + s) * q
        sq = np.convolve(q, q)
        off = s - 1  # x^{k+2s} = x^{(k + s - 1) + (s + 1)}
        m = np.arange(n)
        idx = m - off
        ok = idx >= 0
        out[m[ok]] -= 0.5 * sq[idx[ok]]
        return ExteriorDifferential(out, s + 1)
    raise TypeError(f"unsupported series type {type(psi).__name__}")


def schwarzian(h):
    """Psi applied to the pre-Schwarzian; exterior results are returned with shift 4."""
    out = psi_map(pre_schwarzian(h))
    if isinstance(out, ExteriorDifferential):
        # the leading coefficient is -2 q_0 with q_0 = 0 exactly
        return ExteriorDifferential(out.coeffs[1:] if out.coeffs.size > 1 else [0.0], out.shift + 1)
    return out


def psi_hat(psi: TaylorSeries):
    return psi_map(psi), psi.coeffs[0] / 2


def psi_hat_linearized_solve(psi: TaylorSeries, phi: TaylorSeries, c: complex) -> TaylorSeries:
    """Solve varphi_z - psi varphi = phi with varphi(0) = 2 c.

    With f' = exp(int psi) the solution is f' (int_0^z phi / f' + 2 c).
    """
    n = min(psi.order, phi.order)
    fp = S.exp(S.antiderivative(psi.truncate(n)).truncate(n + 1))
    inner = S.antiderivative(S.div(phi.truncate(n), fp.truncate(n))) + 2 * c
    return S.mul(fp, inner)


def linearized_apply(psi: TaylorSeries, varphi: TaylorSeries):
    """The forward map varphi -> (varphi_z - psi varphi, varphi(0) / 2)."""
    d = S.derivative(varphi)
    n = min(d.order, psi.order)
    return d.truncate(n) - S.mul(psi.truncate(n), varphi.truncate(n)), varphi.coeffs[0] / 2


# ---------------------------------------------------------------- model conversions

def _conj_taylor(t: TaylorSeries) -> TaylorSeries:
    return TaylorSeries(np.conj(t.coeffs))


def invert_model(p: NormalizedPair) -> NormalizedPair:
    """Pair of the inverse welding: reflect each map through the circle and swap."""
    n = working_order(p)
    G = p.g.G().truncate(n)  # g = z G(1/z)
    F = TaylorSeries(p.f.coeffs[1:]).truncate(n)  # f = z F(z)
    bbar = np.conj(p.g.b)
    # j g j (z) = z / conj(G)(z); the dilation r(z) = conj(b) z fixes f'(0) = 1
    f_new = TaylorSeries(np.concatenate([[0.0], S.div(TaylorSeries.constant(bbar, n), _conj_taylor(G)).coeffs]))
    # j f j (z) = z / conj(F)(1/z), then scaled by conj(b)
    g_new = ExteriorSeries.from_G(S.div(TaylorSeries.constant(bbar, n), _conj_taylor(F)))
    coeffs = f_new.coeffs.copy()
    coeffs[1] = 1.0
    return NormalizedPair(TaylorSeries(coeffs), g_new, f"inverse({p.label})")


def to_d_model(p: NormalizedPair) -> DModelPair:
    """Conjugate each map by 1/z; g_star'(0) = 1 / b exactly."""
    n = working_order(p)
    F = TaylorSeries(p.f.coeffs[1:]).truncate(n)
    G = p.g.G().truncate(n)
    f_star = ExteriorSeries.from_G(S.reciprocal(F))
    g_star = TaylorSeries(np.concatenate([[0.0], S.reciprocal(G).coeffs]))
    return DModelPair(ExteriorSeries(1.0, f_star.b0, f_star.tail), g_star)


# ---------------------------------------------------------------- kernels

def _fp(f: TaylorSeries, z):
    return S.evaluate(S.derivative(f), z)


def _closed_kernel(l: int, p: NormalizedPair, z, w):
    f, g = p.f, p.g
    if l == 1:
        return (1 / (z - w) ** 2 - _fp(f, z) * _fp(f, w) / (f(z) - f(w)) ** 2) / np.pi
    if l == 4:
        return (1 / (z - w) ** 2 - g.derivative_at(z) * g.derivative_at(w) / (g(z) - g(w)) ** 2) / np.pi
    if l == 2:
        return _fp(f, z) * g.derivative_at(w) / (f(z) - g(w)) ** 2 / np.pi
    return g.derivative_at(z) * _fp(f, w) / (g(z) - f(w)) ** 2 / np.pi


def _in_domain(l: int, z, w) -> bool:
    inside = {1: (True, True), 2: (True, False), 3: (False, True), 4: (False, False)}[l]
    for pt, want_inside in zip((z, w), inside):
        r = abs(pt)
        if want_inside and r >= 1:
            return False
        if not want_inside and r <= 1:
            return False
    return True


def kernel_eval(l: int, p: NormalizedPair, z: complex, w: complex, quad: int = 64) -> complex:
    """Pointwise value of the kernel K_l of the truncated pair.

    On the diagonal K_1(z, z) = -S(f)(z) / (6 pi), and similarly for K_4 with g.
    Near the diagonal (|z - w| < DELTA_SWITCH) the rational form cancels badly,
    so the value is recovered from a contour average of the same kernel along
    the analytic family s -> K(c + s u, c - s u) around the midpoint c.
    """
    if l not in (1, 2, 3, 4):
        raise ValueError("kernel index must be 1, 2, 3 or 4")
    z, w = complex(z), complex(w)
    if not _in_domain(l, z, w):
        raise DomainViolation(f"({z}, {w}) outside the domain of K_{l}")
    if l in (2, 3):
        return complex(_closed_kernel(l, p, z, w))
    if z == w:
        if l == 1:
            return complex(-S.evaluate(schwarzian(p.f), z) / (6 * np.pi))
        return complex(-schwarzian(p.g)(z) / (6 * np.pi))
    d = z - w
    if abs(d) >= DELTA_SWITCH:
        return complex(_closed_kernel(l, p, z, w))
    c = (z + w) / 2
    u = d / abs(d)
    s0 = abs(d) / 2
    dist = (1 - abs(c)) if l == 1 else (abs(c) - 1)
    rho = min(0.05, 0.5 * dist)
    if rho <= 2 * s0:
        return complex(_closed_kernel(l, p, z, w))
    theta = 2 * np.pi * np.arange(quad) / quad
    s = rho * np.exp(1j * theta)
    vals = _closed_kernel(l, p, c + s * u, c - s * u)
    # Cauchy integral (1/2 pi i) int F(s) / (s - s0) ds by the trapezoid rule
    return complex(np.mean(vals * s / (s - s0)))


# ---------------------------------------------------------------- diagnostics

@dataclass
class BoundaryProfiles:
    radii: np.ndarray
    schwarzian_sup: np.ndarray  # sup (1-r^2)^2 |S(f)| on |z| = r
    pre_schwarzian_sup: np.ndarray  # sup (1-r^2) |A(f)| on |z| = r
    schwarzian_sup_ext: np.ndarray  # same for g on |z| = 1/r
    pre_schwarzian_sup_ext: np.ndarray
    norms: dict


def boundary_profiles(p: NormalizedPair, radii: Sequence[float], n_angles: int = 256) -> BoundaryProfiles:
    radii = np.asarray(radii, dtype=float)
    if np.any((radii <= 0) | (radii >= 1)):
        raise DomainViolation("radii must lie in (0, 1)")
    Sf, Af = schwarzian(p.f), pre_schwarzian(p.f)
    Sg, Ag = schwarzian(p.g), pre_schwarzian(p.g)
    th = 2 * np.pi * np.arange(n_angles) / n_angles
    e = np.exp(1j * th)
    out = {k: np.zeros(radii.size) for k in ("s", "a", "se", "ae")}
    for i, r in enumerate(radii):
        z = r * e
        out["s"][i] = (1 - r * r) ** 2 * np.max(np.abs(S.evaluate(Sf, z)))
        out["a"][i] = (1 - r * r) * np.max(np.abs(S.evaluate(Af, z)))
        # on |z| = 1/r the exterior weights are the reflected ones
        ze = e / r
        out["se"][i] = (1 - r * r) ** 2 * np.max(np.abs(Sg(ze))) / r**4
        out["ae"][i] = (1 - r * r) * np.max(np.abs(Ag(ze))) / r**2
    norms = {
        "schwarzian_f_A2": S.a2_hyperbolic_norm_sq(Sf),
        "pre_schwarzian_f_A21": S.a21_norm_sq(Af),
        "schwarzian_g_A2": S.a2_hyperbolic_norm_sq_exterior(Sg.coeffs),
        "pre_schwarzian_g_A21": S.a21_norm_sq_exterior(Ag.coeffs),
    }
    return BoundaryProfiles(radii, out["s"], out["a"], out["se"], out["ae"], norms)


def check_disjoint(p: NormalizedPair, tol: float = 1e-6, M: int = 1024) -> float:
    """Hausdorff distance between the two boundary images; warns above tol."""
    a = S.boundary_values(p.f, M)
    b = S.boundary_values(p.g, M)
    d = np.abs(a[:, None] - b[None, :])
    haus = float(max(d.min(axis=1).max(), d.min(axis=0).max()))
    if haus > tol:
        warnings.warn(f"boundary images differ by {haus:.3g}; disjointness not confirmed", RuntimeWarning)
    return haus
