import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from oracles import hankel_closed_sum, hankel_condition_scale
from resonances.errors import ConvergenceError, DomainError, NumericalError, \
    SingularSystemError
from resonances.numerics import ComplexRegion, adaptive_quadrature, count_zeros, \
    least_squares_fit, newton_complex, principal_value_quadrature, riccati_bessel_j, \
    riccati_hankel, spherical_hankel_in, spherical_hankel_out, winding_number


# --- special functions -----------------------------------------------------

def test_h0_closed_form():
    x = np.linspace(0.1, 20, 50)
    assert np.allclose(spherical_hankel_out(0, x), -1j * np.exp(1j * x) / x, rtol=1e-15)


def test_hankel_zero_argument_rejected():
    with pytest.raises(DomainError):
        spherical_hankel_out(2, 0.0)


def test_negative_order_rejected():
    with pytest.raises(DomainError):
        riccati_hankel(-1, 1.0)


@settings(max_examples=200, deadline=None)
@given(l=st.integers(0, 8),
       re=st.floats(-30, 30), im=st.floats(-5, 5))
def test_hankel_matches_series(l, re, im):
    z = complex(re, im)
    if abs(z) < 0.2:
        return
    # below the real axis the terms carry e^{|Im z|} and partly cancel, so the
    # error is measured against the term sizes rather than the result
    ref = hankel_closed_sum(l, z)
    assert abs(spherical_hankel_out(l, z) - ref) <= 1e-13 * hankel_condition_scale(l, z)


@pytest.mark.parametrize("l,z", [(1, 1j), (2, 3 + 0.5j), (5, 2 - 1j), (7, 6 + 0j)])
def test_hankel_relative_accuracy(l, z):
    ref = hankel_closed_sum(l, z)
    assert abs(spherical_hankel_out(l, z) - ref) <= 1e-12 * abs(ref)


def test_incoming_is_conjugate_on_real_axis():
    x = np.linspace(0.3, 15, 40)
    for l in range(5):
        assert np.allclose(spherical_hankel_in(l, x), np.conj(spherical_hankel_out(l, x)),
                           rtol=1e-14)


@pytest.mark.parametrize("l", range(6))
def test_riccati_wronskian(l):
    # W[H^-, H^+] = 2i for every l and z
    z = np.array([0.7, 3.0, 10.0, 2 - 0.5j, 4 + 1j])
    hp, dhp = riccati_hankel(l, z, +1)
    hm, dhm = riccati_hankel(l, z, -1)
    assert np.allclose(hm * dhp - dhm * hp, 2j, atol=1e-11)


@pytest.mark.parametrize("l", range(5))
def test_riccati_derivative_by_differences(l):
    z = 2.3 - 0.4j
    h = 1e-6
    hp, dhp = riccati_hankel(l, z, +1)
    fd = (riccati_hankel(l, z + h, +1)[0] - riccati_hankel(l, z - h, +1)[0]) / (2 * h)
    assert abs(fd - dhp) < 1e-8 * max(1, abs(dhp))
    j, dj = riccati_bessel_j(l, z)
    fdj = (riccati_bessel_j(l, z + h)[0] - riccati_bessel_j(l, z - h)[0]) / (2 * h)
    assert abs(fdj - dj) < 1e-8 * max(1, abs(dj))


def test_regular_is_real_part_of_outgoing():
    x = np.linspace(0.5, 12, 30)
    for l in range(4):
        hp, _ = riccati_hankel(l, x, +1)
        j, _ = riccati_bessel_j(l, x)
        # H^+ = n + i j with the Riccati functions real on the axis
        assert np.allclose(hp.imag, j.real, atol=1e-13)


# --- quadrature --------------------------------------------------------------

def test_polynomial_exact():
    assert adaptive_quadrature(lambda x: x ** 2, 0, 1) == pytest.approx(1 / 3, abs=1e-15)


def test_infinite_range():
    assert adaptive_quadrature(lambda x: np.exp(-x), 0, np.inf) == pytest.approx(1, abs=1e-12)


def test_narrow_lorentzian():
    val = adaptive_quadrature(lambda x: 0.025 / np.pi / (x * x + 0.025 ** 2), -1, 1,
                              points=[0.0])
    assert val == pytest.approx(2 * math.atan(40) / math.pi, abs=1e-11)


def test_full_output_and_complex():
    est, err, n = adaptive_quadrature(lambda x: np.exp(1j * x), 0, math.pi, full_output=True)
    assert abs(est - 2j) < 1e-12
    assert err < 1e-10 and n >= 1


def test_quadrature_budget_exhaustion():
    with pytest.raises(ConvergenceError) as info:
        adaptive_quadrature(lambda x: np.sin(1 / x), 1e-8, 1, tol=1e-14, max_subdivisions=5)
    assert info.value.best is not None


def test_quadrature_rejects_nonfinite():
    with pytest.raises(NumericalError):
        adaptive_quadrature(lambda x: np.where(x > 0.5, np.nan, 1.0), 0, 1)


@settings(max_examples=50, deadline=None)
@given(a=st.floats(-3, 3), w=st.floats(0.1, 5), freq=st.floats(0, 20))
def test_quadrature_matches_scipy(a, w, freq):
    f = lambda x: np.cos(freq * x) * np.exp(-x * x)
    ref = integrate.quad(f, a, a + w, epsabs=1e-14, limit=200)[0]
    assert adaptive_quadrature(f, a, a + w) == pytest.approx(ref, abs=1e-10)


def test_principal_value_symmetric_and_shifted():
    assert abs(principal_value_quadrature(lambda x: 1 / x, -1, 1, 0)) < 1e-14
    # PV ∫_0^2 x/(x-1) dx = 2
    assert principal_value_quadrature(lambda x: x / (x - 1), 0, 2, 1) == pytest.approx(2, abs=1e-12)
    # PV ∫_0^3 dx/(x-1) = ln 2
    assert principal_value_quadrature(lambda x: 1 / (x - 1), 0, 3, 1) == pytest.approx(
        math.log(2), abs=1e-12)


def test_principal_value_infinite_upper_limit():
    # PV ∫_0^∞ dx / ((x - 1)(x + 1)^2) ; compare with scipy's Cauchy weight
    ref = (integrate.quad(lambda x: 1 / (x + 1) ** 2, 0, 5, weight="cauchy", wvar=1)[0]
           + integrate.quad(lambda x: 1 / ((x - 1) * (x + 1) ** 2), 5, np.inf)[0])
    val = principal_value_quadrature(lambda x: 1 / ((x - 1) * (x + 1) ** 2), 0, np.inf, 1)
    assert val == pytest.approx(ref, abs=1e-10)


def test_principal_value_point_outside():
    with pytest.raises(DomainError):
        principal_value_quadrature(lambda x: x, 0, 1, 2)


# --- roots and winding --------------------------------------------------------

def test_newton_finds_i():
    res = newton_complex(lambda z: z * z + 1, 0.5 + 0.8j)
    assert abs(res.location - 1j) < 1e-12
    assert res.residual_norm < 1e-12


def test_newton_with_derivative_and_failure():
    res = newton_complex(lambda z: np.exp(z) - 2, 1.0, fprime=np.exp)
    assert abs(res.location - math.log(2)) < 1e-13
    with pytest.raises(ConvergenceError) as info:
        newton_complex(lambda z: z * z + 1, 0.0 + 0.0j, max_iter=5)
    assert info.value.best is not None


def test_region_validation():
    with pytest.raises(DomainError):
        ComplexRegion(1, 0, 0, 1)


def test_count_zeros_polynomial():
    region = ComplexRegion(-2, 2, -2, 2)
    assert count_zeros(lambda z: z * z + 1, region) == 2
    assert count_zeros(lambda z: z * z + 1, ComplexRegion(0.5, 2, -2, 2)) == 0
    assert count_zeros(lambda z: (z - 0.3) ** 3 * (z + 1j), region) == 4


def test_winding_of_pole_is_negative():
    w = winding_number(lambda z: 1 / (z - 0.1j), ComplexRegion(-1, 1, -1, 1))
    assert w == pytest.approx(-1, abs=1e-12)


def test_zero_on_boundary_detected():
    with pytest.raises(NumericalError):
        count_zeros(lambda z: z - 1.0, ComplexRegion(-1, 1, -1, 1))


@settings(max_examples=30, deadline=None)
@given(roots=st.lists(st.tuples(st.floats(-3, 3), st.floats(-3, 3)), min_size=1, max_size=6))
def test_count_zeros_random_polynomials(roots):
    zs = [complex(a, b) for a, b in roots]
    region = ComplexRegion(-1.013, 1.021, -0.987, 1.007)
    margin = 0.02
    for z in zs:
        if (abs(z.real - region.re_min) < margin or abs(z.real - region.re_max) < margin
                or abs(z.imag - region.im_min) < margin or abs(z.imag - region.im_max) < margin):
            return

    def f(z):
        out = np.ones_like(np.asarray(z, dtype=complex))
        for r in zs:
            out = out * (z - r)
        return out

    inside = sum(region.contains(z) for z in zs)
    assert count_zeros(f, region) == inside


# --- least squares -----------------------------------------------------------

def test_least_squares_exact_exponential():
    x = np.linspace(0, 2, 30)
    y = 3 * np.exp(-1.7 * x)
    res = least_squares_fit(lambda x, a, b: a * np.exp(-b * x), x, y, [1.0, 1.0])
    assert np.allclose(res.params, [3, 1.7], atol=1e-10)
    assert res.converged and res.residual_norm < 1e-10


def test_least_squares_covariance_matches_linear_theory():
    rng = np.random.default_rng(3)
    x = np.linspace(0, 1, 50)
    y = 2 + 0.5 * x + 0.01 * rng.standard_normal(x.size)
    res = least_squares_fit(lambda x, a, b: a + b * x, x, y, [0.0, 0.0])
    A = np.column_stack([np.ones_like(x), x])
    coef, rss, *_ = np.linalg.lstsq(A, y, rcond=None)
    cov = rss[0] / (x.size - 2) * np.linalg.inv(A.T @ A)
    assert np.allclose(res.params, coef, atol=1e-12)
    assert np.allclose(res.covariance, cov, rtol=1e-6)


def test_least_squares_rank_deficient_and_underdetermined():
    x = np.linspace(0, 1, 10)
    with pytest.raises(SingularSystemError):
        least_squares_fit(lambda x, a, b: (a + b) * x, x, 2 * x, [1.0, 1.0])
    with pytest.raises(DomainError):
        least_squares_fit(lambda x, a, b: a + b * x, x[:2], x[:2], [0.0, 0.0])
