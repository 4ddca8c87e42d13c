"""Scalar functionals of a welding pair.

Area integrals of |h''/h'|^2 are never done by quadrature here: with
log h' = sum c_n z^n the integral over the disk is pi sum n |c_n|^2, and the
exterior case is the same sum for the coefficients in 1/z.
"""
from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import series as S
from .errors import StepTooSmall
from .faber import GrunskyTable, grunsky_table
from .operators import SpectralReport, blocks_from_table, fredholm_spectrum, unitarity_residuals
from .pair import NormalizedPair, _exterior_h, invert_model, to_d_model, working_order
from .series import ExteriorSeries, TaylorSeries

DEFAULT_N = 48
FD_STEP = 1e-2
FD_NOISE_LIMIT = 1e-6


# ---------------------------------------------------------------- series norms

def _log_derivative(h, order: Optional[int] = None) -> np.ndarray:
    """Coefficients of log(h'/h'(0)) in z (Taylor) or in 1/z (exterior), constant dropped.

    h is treated as an exact polynomial, padded to `order` before the log.
    """
    if isinstance(h, TaylorSeries):
        d = S.derivative(h)
    elif isinstance(h, ExteriorSeries):
        d = _exterior_h(h)  # g'(z) = H(1/z)
    else:
        raise TypeError(f"unsupported series type {type(h).__name__}")
    d = d.truncate(max(d.order, order or S.PAD_ORDER))
    return S.log_nonzero(d).coeffs[1:]


def dirichlet_log_derivative(h, order: Optional[int] = None) -> float:
    """Area integral of |h''/h'|^2 over the disk or its exterior, as pi sum n |c_n|^2."""
    c = _log_derivative(h, order)
    n = np.arange(1, c.size + 1)
    return float(np.pi * np.sum(n * np.abs(c) ** 2))


def s1(p: NormalizedPair) -> float:
    """Universal Liouville action of the pair."""
    return dirichlet_log_derivative(p.f) + dirichlet_log_derivative(p.g) - 4 * np.pi * np.log(abs(p.g.b))


def s1_tilde(p: NormalizedPair) -> float:
    """The same action written with the maps conjugated by 1/z."""
    d = to_d_model(p)
    gp0 = d.g_star.coeffs[1]
    return (dirichlet_log_derivative(d.g_star) + dirichlet_log_derivative(d.f_star)
            + 4 * np.pi * np.log(abs(gp0)))


def s2(r: SpectralReport) -> float:
    return float(r.s2)


def spectrum_of(p: NormalizedPair, N: int = DEFAULT_N, table: Optional[GrunskyTable] = None) -> SpectralReport:
    t = table if table is not None else grunsky_table(p, N)
    return fredholm_spectrum(blocks_from_table(t))


def main_identity_residual(p: NormalizedPair, N: int = DEFAULT_N,
                           spectrum: Optional[SpectralReport] = None) -> float:
    r = spectrum if spectrum is not None else spectrum_of(p, N)
    return abs(r.s2 + s1(p) / (12 * np.pi))


def polyakov_surgery(p: NormalizedPair, N: int = DEFAULT_N, spectrum: Optional[SpectralReport] = None):
    """(interior, exterior, residual): the two relative log-determinants and |s2 - interior - exterior|."""
    d = to_d_model(p)
    gp0 = d.g_star.coeffs[1]
    interior = -dirichlet_log_derivative(d.g_star) / (12 * np.pi) - np.log(abs(gp0)) / 3
    exterior = -dirichlet_log_derivative(d.f_star) / (12 * np.pi)
    r = spectrum if spectrum is not None else spectrum_of(p, N)
    return float(interior), float(exterior), float(abs(r.s2 - interior - exterior))


def _log_ratio_columns(p: NormalizedPair):
    """Full series for b_{-k,0} from log(f/z) and b_{k,0} from log(g/z)."""
    n = working_order(p)
    F = TaylorSeries(p.f.coeffs[1:]).truncate(n)
    minus = -S.log_nonzero(F).coeffs[1:]
    G = p.g.G().truncate(n)
    plus = -S.log_nonzero(G).coeffs[1:]
    return minus, plus


def vk_identity(p: NormalizedPair, t: Optional[GrunskyTable] = None):
    """(left, right, residual) with left = 2 pi log|b| and right = pi sum k (|b_{-k,0}|^2 + |b_{k,0}|^2).

    The sums run over the full series of the pair, so they are not limited by
    the size of the table; when a table is given its columns are checked
    against those series and the largest discrepancy lands in the residual.
    """
    minus, plus = _log_ratio_columns(p)
    left = 2 * np.pi * np.log(abs(p.g.b))
    right = (np.pi * np.sum(np.arange(1, minus.size + 1) * np.abs(minus) ** 2)
             + np.pi * np.sum(np.arange(1, plus.size + 1) * np.abs(plus) ** 2))
    res = abs(left - right)
    if t is not None:
        N = t.order
        a = np.zeros(N, complex)
        b = np.zeros(N, complex)
        a[: min(N, minus.size)] = minus[:N]
        b[: min(N, plus.size)] = plus[:N]
        res = max(res, float(np.max(np.abs(t.col_minus - a), initial=0.0)),
                  float(np.max(np.abs(t.col_plus - b), initial=0.0)))
    return float(left), float(right), float(res)


# ---------------------------------------------------------------- report

@dataclass
class ActionReport:
    s1: float
    s1_tilde: float
    s2: float
    vk_left: float
    vk_right: float
    polyakov_interior: float
    polyakov_exterior: float
    residual_main: float
    residual_s1_symmetry: float
    residual_vk: float
    residual_surgery: float
    residual_s2_symmetry: float
    meta: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return asdict(self)


def action_report(p: NormalizedPair, N: int = DEFAULT_N, symmetry: bool = True) -> ActionReport:
    table = grunsky_table(p, N)
    sp = fredholm_spectrum(blocks_from_table(table))
    a = s1(p)
    at = s1_tilde(p)
    left, right, rvk = vk_identity(p, table)
    pin, pex, rs = polyakov_surgery(p, N, sp)
    rsym2 = float("nan")
    if symmetry:
        sp_inv = spectrum_of(invert_model(p), N)
        rsym2 = abs(sp.s2 - sp_inv.s2)
    meta = {"N": N, "block": sp.block, "label": p.label, "f_order": p.f.order, "g_order": p.g.order}
    return ActionReport(a, at, sp.s2, left, right, pin, pex, abs(sp.s2 + a / (12 * np.pi)),
                        abs(a - at), rvk, rs, rsym2, meta)


# ---------------------------------------------------------------- families

def ellipse_s2_exact(t: float, terms: int = 200) -> float:
    n = np.arange(1, terms + 1)
    return float(np.sum(np.log1p(-float(t) ** (2 * n))))


def ellipse_ds2_exact(t: float, terms: int = 200) -> float:
    n = np.arange(1, terms + 1)
    t = float(t)
    return float(np.sum(-2 * n * t ** (2 * n - 1) / (1 - t ** (2 * n))))


def _stencil(fun: Callable[[float], tuple], t0: float, h: float):
    pts = {k: fun(t0 + k * h) for k in (-2, -1, 1, 2)}
    out = []
    for i in range(len(pts[1])):
        v = {k: pts[k][i] for k in pts}
        out.append((-v[2] + 8 * v[1] - 8 * v[-1] + v[-2]) / (12 * h))
    return out, pts


@dataclass
class FamilyDerivative:
    t0: float
    h: float
    dS1: float
    dS2: float
    ratio_residual: float
    richardson: dict
    noise: float


def family_derivative(family: Callable[[float], NormalizedPair], t0: float, h: float = FD_STEP,
                      N: int = DEFAULT_N, richardson: bool = True) -> FamilyDerivative:
    """Fourth order central differences of s1 and s2 along a one-parameter family of pairs.

    `family(t)` returns the welded pair at parameter t.  The quotient check is
    |dS2 + dS1 / 12 pi| / |dS1|, or the absolute value when dS1 vanishes.
    """

    def values(t):
        p = family(t)
        sp = spectrum_of(p, N)
        return s1(p), sp.s2, abs(sp.s2 + s1(p) / (12 * np.pi))

    (d1, d2, _), pts = _stencil(values, t0, h)
    # rounding in s1 or the main identity residual, whichever is larger, bounds the value noise
    scale = max(abs(v[0]) for v in pts.values())
    noise = max(max(v[2] for v in pts.values()), np.finfo(float).eps * scale)
    if noise / h > FD_NOISE_LIMIT * max(1.0, abs(d1)):
        raise StepTooSmall(f"step {h:g} amplifies pipeline noise {noise:.3g} past {FD_NOISE_LIMIT:g}")
    ratio = abs(d2 + d1 / (12 * np.pi))
    if abs(d1) > 1e-12:
        ratio /= abs(d1)
    rich = {}
    if richardson:
        (e1, e2, _), _ = _stencil(values, t0, h / 2)
        rich = {"h": h / 2, "dS1": e1, "dS2": e2,
                "dS1_change": abs(e1 - d1), "dS2_change": abs(e2 - d2)}
    return FamilyDerivative(t0, h, float(d1), float(d2), float(ratio), rich, float(noise))


def family_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "s1", "s2", "residual_main"])
    for r in rows:
        w.writerow([f"{r['t']:.17g}", f"{r['s1']:.17g}", f"{r['s2']:.17g}", f"{r['residual_main']:.17g}"])
    return buf.getvalue()
