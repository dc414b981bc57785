import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy import integrate

from ueplab.entropy import (MAX_DIMENSION, EntropyOrder, Method, asymptotic_bound_M,
                            asymptotic_bound_M_generic, babenko_log_constant,
                            entropy_power, heisenberg_product, log_beckner_ratio,
                            renyi_bound, renyi_entropy_radial, usum, usum_closed_exppower)
from ueplab.errors import DomainError
from ueplab.radial import EllipticalLaw, Family, conj_radial_pdf, radial_pdf

mp.mp.dps = 40
LNPI = math.log(math.pi)


def _mp_bound(p):
    p = mp.mpf(p)
    q = p / (p - 1)
    return mp.log(2 * mp.pi) + mp.log(p) / (p - 2) + mp.log(q) / (q - 2)


# ---------------------------------------------------------------- orders and the bound

def test_entropy_order_relations():
    o = EntropyOrder(3.0)
    assert 1 / o.p + 1 / o.q == pytest.approx(1.0, rel=1e-15)
    assert (o.lambda_direct, o.lambda_conj) == (1.5, 0.75)
    assert EntropyOrder(2.0).shannon and EntropyOrder.from_q(2.0).shannon
    assert EntropyOrder.from_q(1.5).p == pytest.approx(3.0, rel=1e-15)
    for bad in (1.0, 0.5, math.nan):
        with pytest.raises(DomainError):
            EntropyOrder(bad)
    with pytest.raises(DomainError):
        EntropyOrder.from_q(1.0)


def test_bound_examples():
    assert renyi_bound(2.0) == pytest.approx(1 + LNPI, rel=1e-15)
    assert renyi_bound(4.0) == pytest.approx(
        math.log(2 * math.pi) + math.log(4) / 2 - 1.5 * math.log(4 / 3), rel=1e-14)
    assert renyi_bound(4.0) == pytest.approx(2.0995012, abs=1e-7)
    assert renyi_bound(math.inf) == pytest.approx(math.log(2 * math.pi), rel=1e-15)
    assert renyi_bound(1e12) == pytest.approx(math.log(2 * math.pi), abs=1e-10)
    with pytest.raises(DomainError):
        renyi_bound(1.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(1.0 + 1e-6, 1e6))
def test_bound_against_mpmath(p):
    assume(abs(p - 2.0) > 1e-3)
    assert renyi_bound(p) == pytest.approx(float(_mp_bound(p)), rel=1e-13)


def test_bound_continuous_through_two():
    for h in (1e-6, 1e-9, 1e-12):
        assert abs(renyi_bound(2 + h) - renyi_bound(2.0)) < 1e-6
        assert abs(renyi_bound(2 - h) - renyi_bound(2.0)) < 1e-6
    # conjugate orders give the same bound
    assert renyi_bound(3.0) == pytest.approx(renyi_bound(1.5), rel=1e-15)


# ---------------------------------------------------------------- radial entropies

def test_radial_entropy_examples():
    g = radial_pdf(EllipticalLaw.gaussian(1))
    assert renyi_entropy_radial(g, 1.0) == pytest.approx(0.5 * (LNPI + 1), rel=1e-12)
    c = radial_pdf(EllipticalLaw.student_t(1, 1))
    assert renyi_entropy_radial(c, 1.0) == pytest.approx(math.log(4 * math.pi), rel=1e-11)


@pytest.mark.parametrize("n", [1, 2, 5, 17])
@pytest.mark.parametrize("lam", [0.3, 1.0, 2.0, 7.5])
def test_gaussian_radial_entropy_closed_form(n, lam):
    # N(0, s^2 I) has H_lam = n ln(2 pi s^2) / 2 + n ln(lam) / (2 (lam - 1))
    s2 = 0.5 * 1.3 ** 2
    exact = 0.5 * n * math.log(2 * math.pi * s2)
    exact += 0.5 * n * (1.0 if lam == 1.0 else math.log(lam) / (lam - 1))
    d = radial_pdf(EllipticalLaw.gaussian(n, 1.3))
    assert renyi_entropy_radial(d, lam) == pytest.approx(exact, rel=1e-10)


def _line_entropy(f, lam, lo=-np.inf, hi=np.inf):
    if lam == 1.0:
        val, _ = integrate.quad(lambda x: -f(x) * math.log(f(x)) if f(x) > 0 else 0.0,
                                lo, hi, epsabs=0, epsrel=1e-12, limit=400)
        return val
    val, _ = integrate.quad(lambda x: f(x) ** lam, lo, hi, epsabs=0, epsrel=1e-12, limit=400)
    return math.log(val) / (1 - lam)


@pytest.mark.parametrize("law", [EllipticalLaw.student_t(1, 0.7), EllipticalLaw.student_t(1, 4),
                                 EllipticalLaw.student_r(1, 0.4), EllipticalLaw.student_r(1, 6)])
@pytest.mark.parametrize("lam", [0.8, 1.0, 2.0])
def test_radial_entropy_against_line_integral(law, lam):
    d = radial_pdf(law)
    lo, hi = (-1.0, 1.0) if law.family is Family.STUDENT_R else (-np.inf, np.inf)

    def f(x):
        return 0.5 * float(d.pdf(np.array([abs(x)]))[0])
    assert renyi_entropy_radial(d, lam) == pytest.approx(_line_entropy(f, lam, lo, hi),
                                                         rel=1e-9, abs=1e-9)


def test_radial_entropy_domain():
    d = radial_pdf(EllipticalLaw.student_t(2, 1))
    with pytest.raises(DomainError):
        renyi_entropy_radial(d, 0.0)
    with pytest.raises(DomainError):
        renyi_entropy_radial(d, 0.5)   # heavy tail: the power integral diverges


# ---------------------------------------------------------------- uncertainty sums

@pytest.mark.parametrize("n", [1, 4, 33])
@pytest.mark.parametrize("p", [1.1, 2.0, 10.0])
def test_gaussian_sum_is_the_bound(n, p):
    res = usum(EllipticalLaw.gaussian(n, scale=0.37), p)
    assert res.method is Method.TRIVIAL_GAUSSIAN
    assert abs(res.gap) < 1e-12


def test_student_t_n1_m3_shannon_example():
    expected = LNPI + 3 * math.log(2) - 1
    assert usum(EllipticalLaw.student_t(1, 3), 2.0).value == pytest.approx(expected, rel=1e-9)
    assert usum_closed_exppower(1, 2.0) == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(2.2241714, abs=1e-7)


def test_existence_failure_reports_threshold():
    with pytest.raises(DomainError) as info:
        usum(EllipticalLaw.student_t(3, 1), 1.4)
    assert info.value.threshold == pytest.approx(1.5)
    with pytest.raises(DomainError) as info:
        usum(EllipticalLaw.student_r(2, 2), 4.0)     # q = 4/3 is the threshold itself
    assert info.value.threshold == pytest.approx(4 / 3)


def test_dimension_limits_and_custom_laws():
    with pytest.raises(DomainError):
        usum(EllipticalLaw.student_t(MAX_DIMENSION[Family.STUDENT_T] + 1, 1), 2.0)
    with pytest.raises(DomainError):
        usum(EllipticalLaw.student_r(MAX_DIMENSION[Family.STUDENT_R] + 1, 70), 2.0)
    with pytest.raises(DomainError):
        usum(EllipticalLaw.custom(2, lambda r: -r * r), 2.0)


def _conj_amplitude(m, u):
    # unitary transform of sqrt(f) for the 1-d Student-t density f, written
    # through (1 + x^2)^-a = int t^(a-1) e^(-t(1+x^2)) dt / Gamma(a) so each
    # Gaussian transforms in closed form and nothing oscillates
    a = 0.25 * (1 + m)
    log_c = math.lgamma(0.5 * (1 + m)) - math.lgamma(0.5 * m) - 0.5 * LNPI
    # with t = e^s the integrand is smooth with doubly exponential decay on
    # both sides of its peak, where t^2 - b t - u^2/4 = 0
    b = a - 1.5
    root = math.sqrt(b * b + u * u)
    peak = math.log(0.5 * (b + root) if b >= 0 else 0.5 * u * u / (root - b))

    def log_w(s):
        if abs(s) > 700:
            return -math.inf
        return (b + 1.0) * s - math.exp(s) - 0.25 * u * u * math.exp(-s)
    top = log_w(peak)
    val = sum(integrate.quad(lambda s: math.exp(log_w(s) - top), lo, hi,
                             epsabs=0, epsrel=1e-13, limit=200)[0]
              for lo, hi in [(-math.inf, peak), (peak, math.inf)])
    log_line = math.log(val) + top + 0.5 * LNPI - math.lgamma(a)
    return math.exp(0.5 * log_c + log_line - 0.5 * math.log(2 * math.pi))


def _student_t_line_sum(m, p):
    # independent 1-d route: direct entropy and the numerically transformed conjugate
    log_c = math.lgamma(0.5 * (1 + m)) - math.lgamma(0.5 * m) - 0.5 * LNPI

    def f(x):
        return math.exp(log_c - 0.5 * (1 + m) * math.log1p(x * x))

    def g(u):
        return _conj_amplitude(m, u) ** 2

    q = p / (p - 1)
    h_dir = _line_entropy(f, p / 2)
    # the conjugate density decays like exp(-2u)
    pieces = [0.0, 1.0, 5.0, 20.0, 60.0]

    def half_line(fn):
        return sum(integrate.quad(fn, lo, hi, epsabs=0, epsrel=1e-12, limit=200)[0]
                   for lo, hi in zip(pieces[:-1], pieces[1:]))
    if q == 2:
        h_conj = 2 * half_line(lambda u: -g(u) * math.log(g(u)))
    else:
        h_conj = math.log(2 * half_line(lambda u: g(u) ** (q / 2))) / (1 - q / 2)
    return h_dir + h_conj


def test_conjugate_oracle_is_normalised():
    for m in (0.6, 2.0, 5.5):
        total = 2 * sum(integrate.quad(lambda u: _conj_amplitude(m, u) ** 2, lo, hi,
                                       epsabs=0, epsrel=1e-12)[0]
                        for lo, hi in [(0, 1), (1, 5), (5, 20), (20, 60)])
        assert total == pytest.approx(1.0, rel=1e-10)


@pytest.mark.parametrize("m,p", [(2.0, 2.0), (2.0, 3.0), (5.5, 1.5), (0.7, 3.5), (1.0, 2.0)])
def test_student_t_sum_against_line_fourier_oracle(m, p):
    assert usum(EllipticalLaw.student_t(1, m), p).value == pytest.approx(
        _student_t_line_sum(m, p), rel=1e-10)


@pytest.mark.parametrize("law", [EllipticalLaw.student_t(3, 1.5), EllipticalLaw.student_r(4, 3)])
@pytest.mark.parametrize("p", [1.7, 2.0, 2.2])
def test_sum_matches_entropies_of_both_densities(law, p):
    q = p / (p - 1)
    res = usum(law, p)
    h_dir = renyi_entropy_radial(radial_pdf(law), p / 2)
    h_conj = renyi_entropy_radial(conj_radial_pdf(law), q / 2)
    assert res.entropy_direct == pytest.approx(h_dir, rel=1e-8, abs=1e-8)
    assert res.entropy_conjugate == pytest.approx(h_conj, rel=1e-8, abs=1e-8)
    assert res.value == pytest.approx((h_dir + h_conj) / law.n, rel=1e-8)


@pytest.mark.parametrize("law", [EllipticalLaw.student_t(2, 0.8), EllipticalLaw.student_r(3, 2)])
@pytest.mark.parametrize("p", [1.6, 2.0, 2.3])
def test_sum_is_scale_invariant(law, p):
    base = usum(law, p)
    assert usum(law.with_scale(5.0), p).value == pytest.approx(base.value, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["student-t", "student-r"]), st.integers(1, 8),
       st.floats(0.05, 12.0), st.floats(1.05, 12.0))
def test_lower_bound_holds(family, n, extra, p):
    m = extra if family == "student-t" else n - 2 + extra
    law = EllipticalLaw(family, n, m)
    try:
        res = usum(law, p)
    except DomainError:
        return
    assert res.gap >= -10 * res.error_estimate


def test_order_objects_and_floats_agree():
    law = EllipticalLaw.student_t(2, 3)
    assert usum(law, EntropyOrder(2.5)).value == usum(law, 2.5).value


# ---------------------------------------------------------------- closed forms

def test_exppower_closed_form_examples():
    assert abs(usum_closed_exppower(10 ** 4, 2.0) - (1 + LNPI)) < 1e-3
    assert usum_closed_exppower(2, 3.0) == pytest.approx(
        usum(EllipticalLaw.student_t(2, 4), 3.0).value, rel=1e-8)


@pytest.mark.parametrize("p", [1.2, 3.0, 8.0])
def test_exppower_tends_to_bound(p):
    gaps = [usum_closed_exppower(n, p) - renyi_bound(p) for n in (10, 100, 10 ** 4, 10 ** 6)]
    assert all(g > 0 for g in gaps)
    assert gaps[-1] < 1e-3


def test_exppower_domain():
    for n in (0, 2.5):
        with pytest.raises(DomainError):
            usum_closed_exppower(n, 2.0)


def test_bound_M_examples():
    assert asymptotic_bound_M(5, 1, 3) >= usum(EllipticalLaw.student_t(5, 1), 3).value - 1e-8
    assert abs(asymptotic_bound_M(10 ** 4, 1, 2) - (1 + LNPI)) < 0.05
    mid = asymptotic_bound_M(2, 2, 2.0)
    assert math.isfinite(mid)
    for h in (1e-5, -1e-5):
        assert abs(asymptotic_bound_M(2, 2, 2 + h) - mid) < 1e-4


@pytest.mark.parametrize("n,m,p", [(1, 1, 3.0), (3, 0.5, 5.0), (5, 2, 1.5), (20, 7.5, 1.6),
                                   (2, 7, 4.0)])
def test_bound_M_two_routes_agree(n, m, p):
    assert asymptotic_bound_M(n, m, p) == pytest.approx(asymptotic_bound_M_generic(n, m, p),
                                                        rel=1e-12)


def test_bound_M_domain():
    with pytest.raises(DomainError):
        asymptotic_bound_M(3, 1, 1.5)
    with pytest.raises(DomainError):
        asymptotic_bound_M(3, 0, 2.0)
    with pytest.raises(DomainError):
        asymptotic_bound_M_generic(3, 1, 2.0)


# ---------------------------------------------------------------- auxiliaries

def test_babenko_examples():
    assert babenko_log_constant(2.0) == pytest.approx(0.0, abs=1e-15)
    assert babenko_log_constant(1.5) == pytest.approx(
        -math.log(4 * math.pi / 3) / 3 + math.log(2 * math.pi / 3) / 6, rel=1e-14)
    assert math.isfinite(babenko_log_constant(1.0001))
    for bad in (1.0, 2.5):
        with pytest.raises(DomainError):
            babenko_log_constant(bad)


@settings(max_examples=50, deadline=None)
@given(st.floats(1.01, 2.0))
def test_babenko_constant_is_at_most_one(p):
    assert babenko_log_constant(p) <= 1e-15


def test_entropy_power_examples():
    assert entropy_power(0.5 * (LNPI + 1), 1) == pytest.approx(0.5, rel=1e-14)
    for n in (1, 3, 8):
        assert entropy_power(0.5 * n * math.log(2 * math.pi * math.e), n) == pytest.approx(
            1.0, rel=1e-14)
    assert entropy_power(math.log(4 * math.pi), 1) == pytest.approx(8 * math.pi / math.e,
                                                                    rel=1e-14)


@pytest.mark.parametrize("law", [EllipticalLaw.gaussian(3), EllipticalLaw.student_t(1, 1),
                                 EllipticalLaw.student_t(4, 6), EllipticalLaw.student_r(2, 2),
                                 EllipticalLaw.student_r(5, 4)])
def test_entropy_power_product(law):
    res = usum(law, 2.0)
    product = entropy_power(res.entropy_direct, law.n) * entropy_power(res.entropy_conjugate,
                                                                      law.n)
    assert math.sqrt(product) >= 0.5 - 1e-10


def test_heisenberg_examples():
    for n in (1, 6):
        assert heisenberg_product(EllipticalLaw.gaussian(n, 2.0)) == pytest.approx(0.5, rel=1e-14)
    with pytest.raises(DomainError):
        heisenberg_product(EllipticalLaw.student_t(2, 1))
    # the conjugate second moment needs (m - n)/2 + 1 > 2
    with pytest.raises(DomainError):
        heisenberg_product(EllipticalLaw.student_r(2, 2))
    for law in (EllipticalLaw.student_r(2, 6), EllipticalLaw.student_t(3, 5),
                EllipticalLaw.student_t(1, 2.5)):
        assert heisenberg_product(law) >= 0.5 - 1e-10


def test_beckner_ratio_diagnostic():
    assert log_beckner_ratio(EllipticalLaw.gaussian(4), 1.5) == pytest.approx(0.0, abs=1e-12)
    for p in (1.5, 3.0):
        val = log_beckner_ratio(EllipticalLaw.student_t(2, 4), p)
        assert math.copysign(1.0, val) == math.copysign(1.0, 2 - p)
