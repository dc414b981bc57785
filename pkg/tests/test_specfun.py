import math
import subprocess
import sys
from concurrent.futures import ThreadPoolExecutor

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ueplab import _pykernels, specfun
from ueplab.errors import DomainError

try:
    from ueplab import _ckernels
except ImportError:  # extension not built
    _ckernels = None

mp.mp.dps = 40
EULER = 0.5772156649015329

log_uniform = st.floats(min_value=-6.0, max_value=6.0).map(lambda e: 10.0 ** e)


# ---------------------------------------------------------------- log-gamma / digamma

def test_log_gamma_examples():
    assert specfun.log_gamma(1.0) == 0.0
    assert specfun.log_gamma(0.5) == pytest.approx(0.5 * math.log(math.pi), rel=1e-15)
    assert specfun.log_gamma(11.5) == pytest.approx(
        specfun.log_gamma(10.5) + math.log(10.5), rel=1e-15)


def test_digamma_examples():
    assert specfun.digamma(1.0) == pytest.approx(-EULER, rel=1e-15)
    assert specfun.digamma(0.5) == pytest.approx(-EULER - 2 * math.log(2.0), rel=1e-15)
    assert specfun.digamma(8.3) == pytest.approx(specfun.digamma(7.3) + 1 / 7.3, rel=1e-15)


def test_recurrences_on_grid():
    x = np.linspace(0.1, 1000.0, 5001)
    lg = specfun.log_gamma(x + 1) - specfun.log_gamma(x) - np.log(x)
    assert np.max(np.abs(lg)) < 1e-12
    ps = specfun.digamma(x + 1) - specfun.digamma(x) - 1.0 / x
    assert np.max(np.abs(ps)) < 1e-11


@settings(max_examples=300, deadline=None)
@given(log_uniform)
def test_log_gamma_against_mpmath(x):
    ref = float(mp.loggamma(mp.mpf(x)))
    got = specfun.log_gamma(x)
    # relative accuracy, or absolute near the zeros of ln Gamma at 1 and 2
    assert abs(got - ref) <= 1e-12 * max(abs(ref), 1.0)


@settings(max_examples=300, deadline=None)
@given(log_uniform)
def test_digamma_against_mpmath(x):
    ref = float(mp.digamma(mp.mpf(x)))
    got = specfun.digamma(x)
    assert abs(got - ref) <= 1e-10 * max(abs(ref), 1.0)


def test_digamma_near_its_root():
    root = float(mp.findroot(mp.digamma, 1.46))
    assert abs(specfun.digamma(root)) < 1e-15


@pytest.mark.parametrize("bad", [0.0, -1.0, -2.5, math.inf, math.nan])
def test_gamma_domain_errors(bad):
    with pytest.raises(DomainError):
        specfun.log_gamma(bad)
    with pytest.raises(DomainError):
        specfun.digamma(bad)


def test_scalar_and_array_shapes():
    assert isinstance(specfun.log_gamma(3.0), float)
    out = specfun.log_gamma(np.full((2, 3), 3.0))
    assert out.shape == (2, 3)
    np.testing.assert_allclose(out, math.log(2.0), rtol=1e-15)


# ---------------------------------------------------------------- Bessel J

def test_bessel_j_examples():
    assert abs(specfun.bessel_j(0.5, math.pi)) < 1e-12
    assert specfun.bessel_j(0.5, math.pi / 2) == pytest.approx(2 / math.pi, rel=1e-12)
    r, nu = 2.5, 3.0
    lhs = specfun.bessel_j(nu - 1, r) + specfun.bessel_j(nu + 1, r)
    assert lhs == pytest.approx(2 * nu / r * specfun.bessel_j(nu, r), rel=1e-12)


def test_bessel_j_half_integer_closed_form():
    r = np.linspace(0.01, 50.0, 4001)
    exact = np.sqrt(2.0 / (math.pi * r)) * np.sin(r)
    assert np.max(np.abs(specfun.bessel_j(0.5, r) - exact)) < 1e-12


@settings(max_examples=300, deadline=None)
@given(st.floats(0.0, 60.0), st.floats(0.0, 300.0))
def test_bessel_j_against_mpmath(nu, x):
    ref = float(mp.besselj(nu, x))
    got = specfun.bessel_j(nu, x)
    assert abs(got - ref) <= max(1e-10 * abs(ref), 1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(50.0, 512.0), st.floats(0.5, 40.0))
def test_log_bessel_j_large_order_small_argument(nu, x):
    # J underflows here; its logarithm must still be accurate
    ref = float(mp.log(abs(mp.besselj(nu, x))))
    la, sign = specfun.log_abs_bessel_j(nu, x)
    assert sign == 1.0
    assert la == pytest.approx(ref, rel=1e-10)


def test_bessel_j_three_term_recurrence_grid():
    r = np.linspace(0.5, 80.0, 400)
    for nu in (1.0, 2.5, 7.25, 20.0):
        lhs = specfun.bessel_j(nu - 1, r) + specfun.bessel_j(nu + 1, r)
        rhs = 2 * nu / r * specfun.bessel_j(nu, r)
        assert np.max(np.abs(lhs - rhs)) < 1e-11


@pytest.mark.parametrize("nu,x", [(-0.5, 1.0), (1.0, -1.0), (513.0, 1.0),
                                  (math.inf, 1.0), (math.nan, 1.0)])
def test_bessel_j_domain_errors(nu, x):
    with pytest.raises(DomainError):
        specfun.bessel_j(nu, x)


def test_bessel_j_order_limit_is_inclusive():
    assert specfun.bessel_j(specfun.NU_MAX, 700.0) == pytest.approx(
        float(mp.besselj(512, 700)), rel=1e-9)


# ---------------------------------------------------------------- scaled Bessel K

def test_log_bessel_k_scaled_examples():
    assert specfun.log_bessel_k_scaled(0.5, 1.0) == pytest.approx(
        math.log(math.sqrt(math.pi / 2)), rel=1e-14)
    assert specfun.log_bessel_k_scaled(-0.25, 2.0) == specfun.log_bessel_k_scaled(0.25, 2.0)
    far = specfun.log_bessel_k_scaled(2.0, 700.0)
    assert math.isfinite(far)
    assert far == pytest.approx(math.log(math.sqrt(math.pi / 1400)), abs=5e-3)
    assert far == pytest.approx(float(mp.log(mp.besselk(2, 700)) + 700), rel=1e-13)


def test_log_bessel_k_half_integer_closed_form():
    r = np.linspace(0.01, 50.0, 2001)
    got = np.exp(specfun.log_bessel_k_scaled(0.5, r))
    assert np.max(np.abs(got - np.sqrt(math.pi / (2 * r)))) < 1e-12


@settings(max_examples=200, deadline=None)
@given(st.floats(-30.0, 30.0), log_uniform.filter(lambda x: x < 5e3))
def test_log_bessel_k_against_mpmath_and_symmetric(nu, x):
    ref = float(mp.log(mp.besselk(nu, x)) + x)
    got = specfun.log_bessel_k_scaled(nu, x)
    assert abs(got - ref) <= 1e-11 * max(abs(ref), 1.0)
    assert abs(specfun.log_bessel_k_scaled(-nu, x) - got) <= 1e-13 * max(abs(got), 1.0)


@pytest.mark.parametrize("x", [0.0, -1.0])
def test_log_bessel_k_domain_errors(x):
    with pytest.raises(DomainError):
        specfun.log_bessel_k_scaled(1.0, x)


# ---------------------------------------------------------------- zeros

def test_zero_examples():
    assert specfun.bessel_j_zero(0.5, 1) == pytest.approx(math.pi, rel=1e-12)
    assert specfun.bessel_j_zero(0.5, 3) == pytest.approx(3 * math.pi, rel=1e-12)
    assert specfun.bessel_j_zero(0.0, 1) == pytest.approx(2.4048256, abs=1e-7)


@pytest.mark.parametrize("nu", [0.0, 0.5, 1.75, 8.0, 24.5, 48.0])
def test_zeros_against_mpmath_and_bracketed(nu):
    zeros = specfun.bessel_j_zeros(nu, 40)
    assert np.all(np.diff(zeros) > 0)
    for k in (1, 2, 7, 40):
        z = zeros[k - 1]
        assert z == pytest.approx(float(mp.besseljzero(nu, k)), rel=1e-10)
        assert specfun.bessel_j_zero(nu, k) == pytest.approx(z, rel=1e-12)
        delta = 1e-4 * z
        assert specfun.bessel_j(nu, z - delta) * specfun.bessel_j(nu, z + delta) < 0


def test_large_index_zero_uses_asymptotic_seed():
    z = specfun.bessel_j_zero(3.0, 5000)
    assert z == pytest.approx(float(mp.besseljzero(3, 5000)), rel=1e-12)


@pytest.mark.parametrize("k", [0, -1, 1.5])
def test_zero_index_domain_error(k):
    with pytest.raises(DomainError):
        specfun.bessel_j_zero(1.0, k)


# ---------------------------------------------------------------- backends

BACKEND_CASES = [
    ("log_gamma", lambda k, x: k.log_gamma(x)),
    ("digamma", lambda k, x: k.digamma(x)),
    ("log_abs_bessel_j", lambda k, x: k.log_abs_bessel_j(3.25, x)[0]),
    ("bessel_j", lambda k, x: k.bessel_j(0.0, x)),
    ("log_bessel_k_scaled", lambda k, x: k.log_bessel_k_scaled(1.5, x)),
]


@pytest.mark.skipif(_ckernels is None, reason="compiled kernels not built")
@pytest.mark.parametrize("name,call", BACKEND_CASES, ids=[c[0] for c in BACKEND_CASES])
def test_compiled_and_python_kernels_agree(name, call):
    x = np.ascontiguousarray(np.random.default_rng(5).uniform(0.01, 120.0, 3000))
    a, b = call(_ckernels, x), call(_pykernels, x)
    np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-300)


@pytest.mark.skipif(_ckernels is None, reason="compiled kernels not built")
def test_compiled_and_python_zero_polish_agree():
    assert _ckernels.bessel_j_root(2.0, 5.0, 6.0) == pytest.approx(
        _pykernels.bessel_j_root(2.0, 5.0, 6.0), rel=1e-14)


def test_pure_python_backend_selected_by_environment(pure_python_env):
    code = ("from ueplab import specfun; import math; "
            "print(specfun.BACKEND, repr(specfun.log_gamma(10.5)), "
            "repr(specfun.bessel_j(2.5, 7.0)))")
    out = subprocess.run([sys.executable, "-c", code], env=pure_python_env,
                         capture_output=True, text=True, check=True).stdout.split()
    assert out[0] == "python"
    assert float(out[1]) == pytest.approx(specfun.log_gamma(10.5), rel=1e-14)
    assert float(out[2]) == pytest.approx(specfun.bessel_j(2.5, 7.0), rel=1e-13)


def test_concurrent_calls_are_consistent():
    x = np.linspace(0.5, 90.0, 2000)
    expected = specfun.bessel_j(4.5, x)
    with ThreadPoolExecutor(4) as pool:
        results = list(pool.map(lambda _: specfun.bessel_j(4.5, x), range(8)))
    for r in results:
        np.testing.assert_array_equal(r, expected)
