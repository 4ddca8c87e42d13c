"""Truncated power series and exterior Laurent series.

Coefficients are stored lowest power first.  Every operation truncates at the
smallest order among its inputs, so the only error made here is truncation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import DivisionByNonUnit, NotComposable, NotInvertible, NotUnit

DEFAULT_ORDER = 32

# Hyperbolic density 4 / (1 - |z|^2)^2 on the disk.  Integrating
# |z^n|^2 (1 - |z|^2)^2 / 4 in polar coordinates gives the per-mode weight
# pi / (2 (n+1)(n+2)(n+3)); with phi = 1 this is pi / 12.
HYPERBOLIC_DENSITY_SCALE = 4.0
# exact polynomials are padded to at least this order before log, reciprocal and friends
PAD_ORDER = 512


def _as_coeffs(c) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(c, dtype=complex)).copy()
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("coefficients must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(arr)):
        raise ValueError("series coefficients must be finite")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class TaylorSeries:
    """c_0 + c_1 z + ... + c_N z^N."""

    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _as_coeffs(self.coeffs))

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    @classmethod
    def zero(cls, order: int = DEFAULT_ORDER) -> "TaylorSeries":
        return cls(np.zeros(order + 1, complex))

    @classmethod
    def identity(cls, order: int = DEFAULT_ORDER) -> "TaylorSeries":
        c = np.zeros(order + 1, complex)
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @classmethod
    def constant(cls, value, order: int = DEFAULT_ORDER) -> "TaylorSeries":
        c = np.zeros(order + 1, complex)
        c[0] = value
        return cls(c)

    def truncate(self, order: int) -> "TaylorSeries":
        """Drop terms above `order`, or pad with zeros up to it."""
        if order <= self.order:
            return TaylorSeries(self.coeffs[: order + 1])
        c = np.zeros(order + 1, complex)
        c[: self.coeffs.size] = self.coeffs
        return TaylorSeries(c)

    def __getitem__(self, k):
        return self.coeffs[k]

    def __len__(self):
        return self.coeffs.size

    def __neg__(self):
        return TaylorSeries(-self.coeffs)

    def __add__(self, other):
        if isinstance(other, TaylorSeries):
            n = min(self.order, other.order) + 1
            return TaylorSeries(self.coeffs[:n] + other.coeffs[:n])
        c = self.coeffs.copy()
        c[0] += other
        return TaylorSeries(c)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, TaylorSeries):
            return mul(self, other)
        return TaylorSeries(self.coeffs * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, TaylorSeries):
            return div(self, other)
        return TaylorSeries(self.coeffs / other)

    def __call__(self, z):
        return evaluate(self, z)

    def allclose(self, other: "TaylorSeries", atol=1e-12) -> bool:
        n = min(self.order, other.order) + 1
        return bool(np.allclose(self.coeffs[:n], other.coeffs[:n], rtol=0, atol=atol))


@dataclass(frozen=True, eq=False)
class ExteriorSeries:
    """b z + b0 + sum_k b_k z^{-k}, a map of the exterior disk fixing infinity."""

    b: complex
    b0: complex
    tail: np.ndarray

    def __post_init__(self):
        b = complex(self.b)
        if b == 0 or not np.isfinite(b):
            raise ValueError("leading coefficient b must be finite and nonzero")
        b0 = complex(self.b0)
        if not np.isfinite(b0):
            raise ValueError("b0 must be finite")
        tail = np.asarray(self.tail, dtype=complex).ravel().copy()
        if not np.all(np.isfinite(tail)):
            raise ValueError("tail coefficients must be finite")
        tail.flags.writeable = False
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "b0", b0)
        object.__setattr__(self, "tail", tail)

    @property
    def order(self) -> int:
        return self.tail.size

    @classmethod
    def identity(cls, order: int = DEFAULT_ORDER, b: complex = 1.0) -> "ExteriorSeries":
        return cls(b, 0.0, np.zeros(order, complex))

    def G(self) -> TaylorSeries:
        """The series G with g(z) = z G(1/z), i.e. [b, b0, b1, b2, ...]."""
        return TaylorSeries(np.concatenate([[self.b, self.b0], self.tail]))

    @classmethod
    def from_G(cls, G: TaylorSeries) -> "ExteriorSeries":
        c = G.coeffs
        if c.size < 2:
            c = np.concatenate([c, [0.0]])
        return cls(c[0], c[1], c[2:])

    def truncate(self, order: int) -> "ExteriorSeries":
        t = np.zeros(order, complex)
        k = min(order, self.tail.size)
        t[:k] = self.tail[:k]
        return ExteriorSeries(self.b, self.b0, t)

    def __call__(self, z):
        return evaluate(self, z)

    def derivative_at(self, z):
        """g'(z) evaluated by Horner in 1/z."""
        z = np.asarray(z, dtype=complex)
        x = 1.0 / z
        k = np.arange(1, self.tail.size + 1)
        # g'(z) = b - sum k b_k x^{k+1}
        acc = np.zeros_like(x)
        for c in (k * self.tail)[::-1]:
            acc = acc * x + c
        return self.b - acc * x * x


Series = Union[TaylorSeries, ExteriorSeries]


# ---------------------------------------------------------------- arithmetic

def mul(a: TaylorSeries, b: TaylorSeries) -> TaylorSeries:
    n = min(a.order, b.order) + 1
    return TaylorSeries(np.convolve(a.coeffs[:n], b.coeffs[:n])[:n])


def _div_coeffs(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    n = num.size
    q = np.zeros(n, complex)
    d0 = den[0]
    rev = den[1:n][::-1] if n > 1 else den[:0]
    for k in range(n):
        # q_k = (num_k - sum_{j<k} q_j den_{k-j}) / d0
        s = np.dot(q[:k], rev[n - 1 - k:]) if k else 0.0
        q[k] = (num[k] - s) / d0
    return q


def div(a: TaylorSeries, b: TaylorSeries) -> TaylorSeries:
    if b.coeffs[0] == 0:
        raise DivisionByNonUnit("divisor has vanishing constant term")
    n = min(a.order, b.order) + 1
    return TaylorSeries(_div_coeffs(a.coeffs[:n], b.coeffs[:n]))


def arith(a: TaylorSeries, b: TaylorSeries, kind: str) -> TaylorSeries:
    if kind == "mul":
        return mul(a, b)
    if kind == "div":
        return div(a, b)
    raise ValueError(f"unknown arithmetic kind {kind!r}")


def reciprocal(a: TaylorSeries) -> TaylorSeries:
    return div(TaylorSeries.constant(1.0, a.order), a)


def power(a: TaylorSeries, n: int) -> TaylorSeries:
    """a**n for integer n >= 0 by binary powering."""
    if n < 0:
        return power(reciprocal(a), -n)
    out = TaylorSeries.constant(1.0, a.order)
    base = a
    while n:
        if n & 1:
            out = mul(out, base)
        n >>= 1
        if n:
            base = mul(base, base)
    return out


# ---------------------------------------------------------------- analytic

def derivative(a: TaylorSeries) -> TaylorSeries:
    if a.order == 0:
        return TaylorSeries([0.0])
    k = np.arange(1, a.order + 1)
    return TaylorSeries(a.coeffs[1:] * k)


def antiderivative(a: TaylorSeries) -> TaylorSeries:
    """Integral from 0, so the constant term is 0 and the order grows by one."""
    k = np.arange(1, a.order + 2)
    return TaylorSeries(np.concatenate([[0.0], a.coeffs / k]))


def log_unit(a: TaylorSeries) -> TaylorSeries:
    """log a for a series with constant term exactly 1."""
    if a.coeffs[0] != 1:
        raise NotUnit(f"log_unit needs c0 = 1, got {a.coeffs[0]!r}")
    if a.order == 0:
        return TaylorSeries([0.0])
    q = _div_coeffs(derivative(a).coeffs, a.coeffs[:-1])
    return antiderivative(TaylorSeries(q))


def log_nonzero(a: TaylorSeries, branch: complex | None = None) -> TaylorSeries:
    """log a for any series with c0 != 0, principal branch unless `branch` given."""
    c0 = a.coeffs[0]
    if c0 == 0:
        raise NotUnit("log of a series with vanishing constant term")
    q = a.coeffs / c0
    q[0] = 1.0  # c0 / c0 can round away from 1
    out = log_unit(TaylorSeries(q)).coeffs.copy()
    out[0] = np.log(c0) if branch is None else branch
    return TaylorSeries(out)


def exp(a: TaylorSeries) -> TaylorSeries:
    n = a.order + 1
    e = np.zeros(n, complex)
    e[0] = np.exp(a.coeffs[0])
    ka = np.arange(n) * a.coeffs
    for m in range(1, n):
        # m e_m = sum_{k=1}^m k a_k e_{m-k}
        e[m] = np.dot(ka[1 : m + 1], e[m - 1 :: -1][:m]) / m
    return TaylorSeries(e)


def analytic(a: TaylorSeries, kind: str) -> TaylorSeries:
    fn = {
        "log_unit": log_unit,
        "exp": exp,
        "derivative": derivative,
        "antiderivative": antiderivative,
    }.get(kind)
    if fn is None:
        raise ValueError(f"unknown analytic kind {kind!r}")
    return fn(a)


# ---------------------------------------------------------------- composition

def compose(outer: TaylorSeries, inner: TaylorSeries) -> TaylorSeries:
    """outer(inner(z)) by Horner; needs inner(0) = 0."""
    if inner.coeffs[0] != 0:
        raise NotComposable("inner series must vanish at 0")
    n = min(outer.order, inner.order)
    inner = inner.truncate(n)
    acc = TaylorSeries.constant(outer.coeffs[n], n)
    for c in outer.coeffs[:n][::-1]:
        acc = mul(acc, inner) + c
    return acc


def revert(s: TaylorSeries) -> TaylorSeries:
    """Compositional inverse by Newton iteration, doubling the attained order."""
    c = s.coeffs
    if c[0] != 0 or s.order < 1 or c[1] == 0:
        raise NotInvertible("revert needs c0 = 0 and c1 != 0")
    N = s.order
    r = TaylorSeries.identity(1) * (1.0 / c[1])
    k = 1
    ds = derivative(s)
    while k < N:
        k = min(2 * k, N)
        rk = r.truncate(k)
        sk = s.truncate(k)
        resid = compose(sk, rk) - TaylorSeries.identity(k)
        dsr = compose(ds.truncate(k), rk)
        r = rk - div(resid, dsr)
    return r.truncate(N)


def revert_lagrange(s: TaylorSeries) -> TaylorSeries:
    """Reference reversion: [w^n] r = (1/n) [z^{n-1}] (z / s(z))^n."""
    c = s.coeffs
    if c[0] != 0 or s.order < 1 or c[1] == 0:
        raise NotInvertible("revert needs c0 = 0 and c1 != 0")
    N = s.order
    h = reciprocal(TaylorSeries(c[1:]))  # z / s(z)
    out = np.zeros(N + 1, complex)
    hp = TaylorSeries.constant(1.0, N - 1)
    for n in range(1, N + 1):
        hp = mul(hp, h.truncate(N - 1))
        out[n] = hp.coeffs[n - 1] / n
    return TaylorSeries(out)


# ---------------------------------------------------------------- evaluation

def _horner(coeffs: np.ndarray, x):
    acc = np.zeros_like(x, dtype=complex)
    for c in coeffs[::-1]:
        acc = acc * x + c
    return acc


def evaluate(s: Series, z):
    """Value of the truncation at z (scalar or array)."""
    scalar = np.isscalar(z)
    zz = np.asarray(z, dtype=complex)
    if isinstance(s, TaylorSeries):
        out = _horner(s.coeffs, zz)
    else:
        x = 1.0 / zz
        out = s.b * zz + s.b0 + x * _horner(s.tail, x) if s.tail.size else s.b * zz + s.b0
    return complex(out) if scalar else out


def boundary_values(s: Series, M: int) -> np.ndarray:
    """Values at the M equispaced points exp(2 pi i j / M), by FFT."""
    if isinstance(s, TaylorSeries):
        c = s.coeffs
        if c.size > M:
            c = _fold(c, M)
        buf = np.zeros(M, complex)
        buf[: c.size] = c
        return np.fft.ifft(buf) * M
    buf = np.zeros(M, complex)
    buf[1 % M] += s.b
    buf[0] += s.b0
    t = s.tail
    if t.size >= M:
        t = _fold(t, M)
    buf[(-np.arange(1, t.size + 1)) % M] += t
    return np.fft.ifft(buf) * M


def _fold(c: np.ndarray, M: int) -> np.ndarray:
    out = np.zeros(M, complex)
    np.add.at(out, np.arange(c.size) % M, c)
    return out


# ---------------------------------------------------------------- norms

def a21_norm_sq(psi: TaylorSeries) -> float:
    """Area norm squared of sum p_k z^k, which is pi sum |p_k|^2 / (k+1)."""
    k = np.arange(psi.coeffs.size)
    return float(np.pi * np.sum(np.abs(psi.coeffs) ** 2 / (k + 1)))


def a21_norm_sq_exterior(q: Sequence[complex]) -> float:
    """Same norm for sum q_k z^{-k-2} on the exterior disk (inversion is an isometry)."""
    q = np.asarray(getattr(q, "coeffs", q), dtype=complex)
    k = np.arange(q.size)
    return float(np.pi * np.sum(np.abs(q) ** 2 / (k + 1)))


def a2_weights(n_terms: int) -> np.ndarray:
    n = np.arange(n_terms)
    return np.pi / (2.0 * (n + 1) * (n + 2) * (n + 3))


def a2_hyperbolic_norm_sq(phi: TaylorSeries) -> float:
    """Weighted L2 norm squared of sum s_n z^n against (1-|z|^2)^2 / 4."""
    c = np.asarray(getattr(phi, "coeffs", phi), dtype=complex)
    return float(np.sum(np.abs(c) ** 2 * a2_weights(c.size)))


def a2_hyperbolic_norm_sq_exterior(s: Sequence[complex]) -> float:
    """Mirror for sum s_n z^{-n-4} on the exterior disk."""
    return a2_hyperbolic_norm_sq(np.asarray(getattr(s, "coeffs", s), dtype=complex))


# ---------------------------------------------------------------- JSON

def _pair(x: complex):
    return [float(np.real(x)), float(np.imag(x))]


def to_literal(s: Series) -> dict:
    if isinstance(s, TaylorSeries):
        return {"kind": "taylor", "coeffs": [_pair(c) for c in s.coeffs]}
    return {
        "kind": "exterior",
        "coeffs": [_pair(c) for c in s.tail],
        "b": _pair(s.b),
        "b0": _pair(s.b0),
    }


def _cplx(v) -> complex:
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ValueError(f"complex literal must be [re, im], got {v!r}")
        return complex(float(v[0]), float(v[1]))
    return complex(v)


def from_literal(d: dict) -> Series:
    kind = d.get("kind")
    coeffs = [_cplx(v) for v in d.get("coeffs", [])]
    if kind == "taylor":
        return TaylorSeries(coeffs or [0.0])
    if kind == "exterior":
        return ExteriorSeries(_cplx(d.get("b", [1.0, 0.0])), _cplx(d.get("b0", [0.0, 0.0])), coeffs)
    raise ValueError(f"unknown series kind {kind!r}")
