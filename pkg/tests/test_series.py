import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grunsky import series as S
from grunsky.errors import DivisionByNonUnit, NotInvertible, NotUnit
from grunsky.series import ExteriorSeries, TaylorSeries

cplx = st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False)


def series_st(n=8, lead=None):
    def build(cs):
        c = np.array(cs, complex)
        if lead is not None:
            c[0] = lead
        return TaylorSeries(c)

    return st.lists(cplx, min_size=n + 1, max_size=n + 1).map(build)


def test_mul_difference_of_squares():
    out = S.mul(TaylorSeries([1, 1, 0]), TaylorSeries([1, -1, 0]))
    assert np.allclose(out.coeffs, [1, 0, -1])


def test_geometric_reciprocal():
    out = S.div(TaylorSeries.constant(1.0, 10), TaylorSeries([1, -1] + [0] * 9))
    assert np.allclose(out.coeffs, np.ones(11))


def test_long_division():
    out = S.div(TaylorSeries([1, 2, 1]), TaylorSeries([1, 1, 0]))
    assert np.allclose(out.coeffs, [1, 1, 0], atol=1e-15)


def test_division_by_non_unit():
    with pytest.raises(DivisionByNonUnit):
        S.div(TaylorSeries([1, 1]), TaylorSeries([0, 1]))


def test_log_unit_of_geometric():
    n = 12
    g = TaylorSeries(np.ones(n + 1))
    lg = S.log_unit(g)
    k = np.arange(1, n + 1)
    assert np.allclose(lg.coeffs[1:], 1 / k, atol=1e-14)
    assert lg.coeffs[0] == 0


def test_log_unit_rejects_non_unit():
    with pytest.raises(NotUnit):
        S.log_unit(TaylorSeries([2.0, 1.0]))


def test_derivative_and_antiderivative():
    a = 0.3 - 0.2j
    assert np.allclose(S.derivative(TaylorSeries([0, 1, a])).coeffs, [1, 2 * a])
    s = TaylorSeries([1.0, 2.0, 3.0])
    assert np.allclose(S.derivative(S.antiderivative(s)).coeffs, s.coeffs)


@settings(max_examples=40, deadline=None)
@given(series_st(10, lead=0.0))
def test_exp_log_round_trip(a):
    # exp of a zero-constant series is a unit series; log brings it back
    u = S.exp(a * 0.5)
    assert np.allclose(S.exp(S.log_unit(u)).coeffs, u.coeffs, atol=1e-12)
    assert np.allclose(S.log_unit(u).coeffs, (a * 0.5).coeffs, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(series_st(6), series_st(6), series_st(6))
def test_ring_laws(a, b, c):
    lhs = S.mul(S.mul(a, b), c)
    rhs = S.mul(a, S.mul(b, c))
    assert np.allclose(lhs.coeffs, rhs.coeffs, atol=1e-12)
    assert np.allclose(S.mul(a, b + c).coeffs, (S.mul(a, b) + S.mul(a, c)).coeffs, atol=1e-12)


def test_revert_by_hand():
    a = 0.25
    r = S.revert(TaylorSeries([0, 1, a, 0, 0]))
    # Lagrange: z - a z^2 + 2 a^2 z^3 - 5 a^3 z^4
    assert np.allclose(r.coeffs, [0, 1, -a, 2 * a**2, -5 * a**3], atol=1e-15)


def test_revert_identity():
    assert np.allclose(S.revert(TaylorSeries.identity(8)).coeffs, TaylorSeries.identity(8).coeffs)


def test_revert_requires_linear_term():
    with pytest.raises(NotInvertible):
        S.revert(TaylorSeries([0, 0, 1]))


@settings(max_examples=40, deadline=None)
@given(series_st(10), st.floats(0.5, 2.0), st.floats(0, 2 * np.pi))
def test_revert_round_trip(s, r, phase):
    c = s.coeffs.copy()
    c[0] = 0
    c[1] = r * np.exp(1j * phase)
    s = TaylorSeries(c)
    inv = S.revert(s)
    ident = TaylorSeries.identity(10).coeffs
    # inverse coefficients can grow like (2/r)^n; judge rounding relative to that size
    scale = max(1.0, float(np.abs(inv.coeffs).max()))
    assert np.allclose(S.compose(inv, s).coeffs, ident, atol=1e-12 * scale)
    assert np.allclose(S.compose(s, inv).coeffs, ident, atol=1e-12 * scale)
    assert np.allclose(S.revert_lagrange(s).coeffs, inv.coeffs, atol=1e-12 * scale)


def test_evaluate_examples():
    assert S.evaluate(TaylorSeries([1, 1, 1]), 0) == 1
    assert abs(S.evaluate(ExteriorSeries(1.0, 0.0, [0.5]), 1.0) - 1.5) < 1e-15
    geo = TaylorSeries(np.ones(51))
    assert abs(S.evaluate(geo, 0.5) - 2) < 1e-15


def test_boundary_values_match_evaluate():
    s = TaylorSeries([0, 1, 0.2j, -0.1])
    M = 16
    z = np.exp(2j * np.pi * np.arange(M) / M)
    assert np.allclose(S.boundary_values(s, M), S.evaluate(s, z))


def test_a21_examples():
    assert S.a21_norm_sq(TaylorSeries([0.0])) == 0
    assert abs(S.a21_norm_sq(TaylorSeries([1.0])) - np.pi) < 1e-15
    a = 0.2 + 0.1j
    assert abs(S.a21_norm_sq(TaylorSeries([2 * a])) - 4 * np.pi * abs(a) ** 2) < 1e-15


def _polar_quadrature(fun, nr=400, nt=64):
    # Gauss-Legendre in r, trapezoid in theta
    x, w = np.polynomial.legendre.leggauss(nr)
    r = (x + 1) / 2
    wr = w / 2
    th = 2 * np.pi * np.arange(nt) / nt
    z = r[:, None] * np.exp(1j * th)[None, :]
    return float(np.sum(fun(z) * (r * wr)[:, None]) * 2 * np.pi / nt)


def test_a2_constant_against_quadrature():
    oracle = _polar_quadrature(lambda z: (1 - np.abs(z) ** 2) ** 2 / 4)
    assert abs(oracle - np.pi / 12) < 1e-13
    assert abs(S.a2_hyperbolic_norm_sq(TaylorSeries([1.0])) - np.pi / 12) < 1e-15


def test_a2_general_series_against_quadrature(rng):
    c = rng.normal(size=6) + 1j * rng.normal(size=6)
    phi = TaylorSeries(c)
    oracle = _polar_quadrature(lambda z: np.abs(S.evaluate(phi, z)) ** 2 * (1 - np.abs(z) ** 2) ** 2 / 4)
    assert abs(S.a2_hyperbolic_norm_sq(phi) - oracle) < 1e-11


def test_a2_first_term_formula(rng):
    # phi = psi' with psi = sum n a_n z^{n-1}
    a = rng.normal(size=8) + 1j * rng.normal(size=8)
    n = np.arange(1, 9)
    psi = TaylorSeries(n * a)
    phi = S.derivative(psi)
    expected = np.pi / 2 * np.sum(n * (n - 1) / (n + 1) * np.abs(a) ** 2)
    assert abs(S.a2_hyperbolic_norm_sq(phi) - expected) < 1e-12 * expected


@settings(max_examples=30, deadline=None)
@given(series_st(8), st.floats(0, 2 * np.pi))
def test_a21_rotation_invariance(psi, beta):
    k = np.arange(psi.coeffs.size)
    rot = TaylorSeries(psi.coeffs * np.exp(1j * beta * (k + 1)))
    assert abs(S.a21_norm_sq(rot) - S.a21_norm_sq(psi)) <= 1e-12 * max(1.0, S.a21_norm_sq(psi))


def test_exterior_series_G_round_trip():
    g = ExteriorSeries(2.0, 0.1, [0.3, -0.2j])
    assert np.allclose(ExteriorSeries.from_G(g.G()).tail, g.tail)
    z = 1.7 * np.exp(0.4j)
    assert abs(g(z) - (2 * z + 0.1 + 0.3 / z - 0.2j / z**2)) < 1e-15


def test_literal_round_trip():
    for s in (TaylorSeries([0, 1, 0.5j]), ExteriorSeries(1.5, 0.2, [0.1, 0.3j])):
        back = S.from_literal(S.to_literal(s))
        assert type(back) is type(s)
        if isinstance(s, TaylorSeries):
            assert np.array_equal(back.coeffs, s.coeffs)
        else:
            assert back.b == s.b and np.array_equal(back.tail, s.tail)
