"""Renyi and Shannon entropies of elliptical laws and their uncertainty sums.

For an order p > 1 with conjugate q = p/(p-1), the uncertainty sum of a
law X in n dimensions is

    U_p = [H_{p/2}(X) + H_{q/2}(conjugate of X)] / n,

in nats per dimension. It never falls below

    B(p) = ln(2 pi) + ln(p)/(p-2) + ln(q)/(q-2),

with the Shannon value 1 + ln(pi) at p = 2, and Gaussians attain it.
"""

import enum
import functools
import math
from dataclasses import dataclass

import numpy as np

from ueplab import quadrature as quad
from ueplab import specfun
from ueplab.errors import DomainError, NonConvergenceError
from ueplab.radial import (
    EllipticalLaw, Family, RadialDensity, Side, _r_consts, _t_consts,
    conjugate_exponent, existence_threshold, log_sphere_area, moment,
    radial_entropy_integral, radial_log_moment, radial_power_integral,
)

__all__ = [
    "EntropyOrder", "Method", "UncertaintySum", "renyi_bound",
    "renyi_entropy_radial", "usum", "usum_closed_exppower",
    "asymptotic_bound_M", "asymptotic_bound_M_generic", "babenko_log_constant",
    "entropy_power", "heisenberg_product", "log_beckner_ratio",
    "MAX_DIMENSION",
]

LN2 = math.log(2.0)
LNPI = math.log(math.pi)

# Largest dimension for which usum runs its quadrature route, per family.
MAX_DIMENSION = {Family.STUDENT_T: 512, Family.STUDENT_R: 64,
                 Family.GAUSSIAN: None}


def _lg(x):
    return specfun.log_gamma(x)


def _psi(x):
    return specfun.digamma(x)


def _log1p_over(x):
    """ln(1 + x) / x, equal to 1 at x = 0."""
    if x == 0.0:
        return 1.0
    return math.log1p(x) / x


@dataclass(frozen=True)
class EntropyOrder:
    """Order pair (p, q) with 1/p + 1/q = 1; p = 2 is the Shannon case."""

    p: float

    def __post_init__(self):
        p = float(self.p)
        if not p > 1.0 or math.isnan(p):
            raise DomainError(f"order p must exceed 1, got {p}", threshold=1.0)
        object.__setattr__(self, "p", p)

    @classmethod
    def from_q(cls, q):
        q = float(q)
        if not q > 1.0:
            raise DomainError(f"order q must exceed 1, got {q}", threshold=1.0)
        return cls(conjugate_exponent(q))

    @property
    def q(self):
        return conjugate_exponent(self.p)

    @property
    def lambda_direct(self):
        return 0.5 * self.p

    @property
    def lambda_conj(self):
        return 0.5 * self.q

    @property
    def shannon(self):
        return self.p == 2.0


class Method(enum.Enum):
    CLOSED_FORM = "closed-form"
    QUADRATURE = "quadrature"
    TRIVIAL_GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class UncertaintySum:
    law: EllipticalLaw
    order: EntropyOrder
    value: float
    bound: float
    method: Method
    error_estimate: float
    entropy_direct: float
    entropy_conjugate: float
    converged: bool = True

    @property
    def gap(self):
        return self.value - self.bound


def renyi_bound(p) -> float:
    """The lower bound B(p); continuous through p = 2 and finite at p = inf."""
    p = float(p)
    if not p > 1.0:
        raise DomainError(f"order p must exceed 1, got {p}", threshold=1.0)
    if p == math.inf:
        return math.log(2.0 * math.pi)
    # with e = p - 2 the two fractions combine to
    # -ln 2 - ln(1 + e/2) + (1 + e) ln(1 + e)/e, free of the pole at e = 0
    e = p - 2.0
    return LNPI - math.log1p(0.5 * e) + (1.0 + e) * _log1p_over(e)


# ---------------------------------------------------------------- radial entropies

def _renyi_radial(d: RadialDensity, lam: float, rel_tol: float):
    """(H_lam, absolute error estimate) of the n-dimensional law behind d."""
    n = d.n
    if lam == 1.0:
        lm = radial_log_moment(d, rel_tol)
        ent = radial_entropy_integral(d, rel_tol)
        value = log_sphere_area(n) + (n - 1) * lm.value - ent.value
        err = (n - 1) * lm.abs_error_estimate + ent.abs_error_estimate
        return value, err, lm.converged and ent.converged
    res = radial_power_integral(d, lam, (n - 1) * (1.0 - lam), rel_tol)
    if res.sign <= 0:
        raise NonConvergenceError("power integral came out non-positive")
    value = log_sphere_area(n) + res.log_abs_value / (1.0 - lam)
    return value, res.rel_error / abs(1.0 - lam), res.converged


def renyi_entropy_radial(d: RadialDensity, lam: float,
                         rel_tol: float = quad.DEFAULT_REL_TOL) -> float:
    """Renyi entropy of order ``lam`` (Shannon at 1) from a radial density."""
    lam = float(lam)
    if not lam > 0:
        raise DomainError("entropy order must be positive", threshold=0.0)
    value, _, ok = _renyi_radial(d, lam, rel_tol)
    if not ok:
        raise NonConvergenceError("entropy quadrature did not converge")
    return value


# ---------------------------------------------------------------- per family

def _gaussian_entropy_rate(lam, log_scale):
    # H_lam / n for variance scale^2 / 2 per component
    return 0.5 * LNPI + 0.5 * _log1p_over(lam - 1.0) + log_scale


def _check_existence(law, order):
    ex = existence_threshold(law)
    if law.family is Family.STUDENT_T and not order.p > ex.p_min:
        raise DomainError(
            f"entropy sum undefined for p={order.p:g}: needs p > {ex.p_min:.10g}",
            threshold=ex.p_min)
    if law.family is Family.STUDENT_R:
        if not order.q > ex.q_min:
            raise DomainError(
                f"entropy sum undefined for q={order.q:g}: needs q > {ex.q_min:.10g}",
                threshold=ex.q_min)
        if not 0.25 * (law.m - law.n) * order.p + 1.0 > 0.0:
            limit = 4.0 / (law.n - law.m)
            raise DomainError(
                f"direct entropy undefined for p={order.p:g}: needs p < {limit:.10g}",
                threshold=limit)


def _student_t_parts(n, m, order, rel_tol):
    """(H direct, H conjugate, abs error, converged) at unit scale."""
    log_s = log_sphere_area(n)
    log_cd, log_ce = _t_consts(n, m)
    nu = 0.25 * (n - m)
    a = 0.5 * (n + m) - 1.0
    if order.shannon:
        h_dir = log_s - log_cd + 0.5 * (n + m) * (_psi(0.5 * (n + m)) - _psi(0.5 * m))
        e_log_r = 0.5 * (_psi(0.25 * (n + m)) + _psi(0.5 * m) + _psi(0.5 * n)
                         - _psi(0.25 * (n + m + 2)))

        # ln K^2 = 2 (ln(e^r K) - r) keeps the logarithm exact where K underflows
        def f_log(r):
            ln_k2 = 2.0 * (specfun.log_bessel_k_scaled(nu, r) - r)
            with np.errstate(divide="ignore"):
                return log_ce + a * np.log(r) + ln_k2 + np.log(np.abs(ln_k2))

        def sign(r):
            return np.sign(specfun.log_bessel_k_scaled(nu, r) - r)
        left = a - 2.0 * abs(nu) - 1e-9
        res = quad.integrate_log(f_log, quad.ExponentialTail(0.0, left), rel_tol,
                                 sign=sign)
        h_conj = log_s - log_ce + (n - 0.5 * (n + m)) * e_log_r - res.value
        return h_dir, h_conj, res.abs_error_estimate, res.converged
    lam = order.lambda_direct
    log_int = (lam * log_cd + _lg(0.5 * n) + _lg(0.5 * (lam * (n + m) - n)) - LN2
               - _lg(0.5 * lam * (n + m)))
    h_dir = log_s + log_int / (1.0 - lam)
    lam_c = order.lambda_conj
    q = order.q
    c = n - 1.0 + 0.25 * q * (m - n)

    def f_log(r):
        return c * np.log(r) + q * (specfun.log_bessel_k_scaled(nu, r) - r)
    left = c - q * abs(nu) - (1e-9 if nu == 0 else 0.0)
    res = quad.integrate_log(f_log, quad.ExponentialTail(0.0, left), rel_tol)
    h_conj = log_s + (lam_c * log_ce + res.log_abs_value) / (1.0 - lam_c)
    return h_dir, h_conj, res.rel_error / abs(1.0 - lam_c), res.converged


def _student_r_parts(n, m, order, rel_tol):
    log_s = log_sphere_area(n)
    log_cd, log_ce = _r_consts(n, m)
    nu = 0.25 * (m + n)
    lam0 = 0.5 * (m - n) + 1.0
    a = -lam0
    if order.shannon:
        h_dir = log_s - log_cd - 0.5 * (m - n) * (_psi(lam0) - _psi(0.5 * m + 1.0))
        e_log_r = (-_psi(lam0) + 0.5 * _psi(0.5 * n) + LN2
                   + _psi(0.25 * (m - n) + 1.0) + 0.5 * _psi(0.5 * m + 1.0))
        res = quad.integrate_oscillatory(a, nu, 2.0, rel_tol, weight="log_power")
        c_e = math.exp(log_ce)
        h_conj = log_s - log_ce + 0.5 * (m + n) * e_log_r - c_e * res.value
        return h_dir, h_conj, c_e * res.abs_error_estimate, res.converged
    lam = order.lambda_direct
    e = 0.5 * lam * (m - n)
    log_int = (lam * log_cd + _lg(0.5 * n) + _lg(e + 1.0) - LN2
               - _lg(0.5 * n + e + 1.0))
    h_dir = log_s + log_int / (1.0 - lam)
    lam_c = order.lambda_conj
    q = order.q
    res = quad.integrate_oscillatory(n - 1.0 - 0.25 * q * (m + n), nu, q, rel_tol)
    h_conj = log_s + (lam_c * log_ce + res.log_abs_value) / (1.0 - lam_c)
    return h_dir, h_conj, res.rel_error / abs(1.0 - lam_c), res.converged


def usum(law: EllipticalLaw, p: float, rel_tol: float = quad.DEFAULT_REL_TOL
         ) -> UncertaintySum:
    """Uncertainty sum U_p of ``law`` and its conjugate, in nats per dimension.

    Raises DomainError (with ``threshold`` set) when an entropy in the sum
    does not exist for this order.
    """
    order = p if isinstance(p, EntropyOrder) else EntropyOrder(p)
    return _usum_cached(law, order, float(rel_tol))


@functools.lru_cache(maxsize=4096)
def _usum_cached(law, order, rel_tol):
    n, m = law.n, law.m
    fam = law.family
    bound = renyi_bound(order.p)
    log_scale = math.log(law.scale)
    if fam is Family.GAUSSIAN:
        h_dir = n * _gaussian_entropy_rate(order.lambda_direct, log_scale)
        h_conj = n * _gaussian_entropy_rate(order.lambda_conj, -log_scale)
        return UncertaintySum(law, order, (h_dir + h_conj) / n, bound,
                              Method.TRIVIAL_GAUSSIAN, 0.0, h_dir, h_conj)
    if fam is Family.CUSTOM:
        raise DomainError("entropy sums need an analytic family; for custom "
                          "profiles combine renyi_entropy_radial with hankel_conjugate")
    _check_existence(law, order)
    limit = MAX_DIMENSION[fam]
    if n > limit:
        raise DomainError(f"{fam.value} entropy sums are supported up to n={limit}")
    parts = _student_t_parts if fam is Family.STUDENT_T else _student_r_parts
    h_dir, h_conj, err, ok = parts(n, m, order, rel_tol)
    # the scale shifts the two entropies by +-n ln(scale)
    h_dir += n * log_scale
    h_conj -= n * log_scale
    value = (h_dir + h_conj) / n
    err = err / n + 8.0 * np.finfo(float).eps * (abs(h_dir) + abs(h_conj)) / n
    return UncertaintySum(law, order, value, bound, Method.QUADRATURE, err,
                          h_dir, h_conj, ok)


# ---------------------------------------------------------------- closed forms

def usum_closed_exppower(n: int, p: float) -> float:
    """U_p for Student-t with m = n + 2, whose conjugate is exp(-2|x|)-shaped."""
    if int(n) != n or n < 1:
        raise DomainError("n must be a positive integer")
    order = EntropyOrder(p)
    n = int(n)
    if order.shannon:
        return 1.0 + math.log(0.5 * math.pi) + (n + 1.0) / n * (
            _psi(n) - _psi(0.5 * n) - 1.0 / n)
    p, q = order.p, order.q
    if q == math.inf:
        raise DomainError("p = 1 has no conjugate order")
    head = LNPI + (2.0 * math.log(q) - q * LN2) / (q - 2.0)
    body = (LN2 + _lg(n) - _lg(0.5 * n) + _lg(0.5 * ((n + 1) * p - n))
            - _lg(0.5 * (n + 1) * p))
    return head + 2.0 / (n * (2.0 - p)) * body


def asymptotic_bound_M(n: int, m: float, p: float) -> float:
    """Closed-form upper bound M(n, m, p) on U_p of Student-t(n, m)."""
    order = EntropyOrder(p)
    n, m = _check_nm(n, m, order)
    if order.shannon:
        return (math.log(2.0 * math.pi)
                + 2.0 / n * (_lg(0.25 * n) - _lg(0.5 * n) + _lg(0.25 * m)
                             - _lg(0.25 * (n + m)))
                + 0.5 * _psi(0.5 * n) - m / (2.0 * n) * _psi(0.5 * m)
                + (m - n) / (2.0 * n) * _psi(0.5 * (m + n)) + _psi(0.25 * (m + n)))
    p, q = order.p, order.q
    g1 = 0.25 * (n * (p - 2.0) + m * p) / p
    g2 = 0.25 * (2.0 * n * (p - 2.0) + (n + m) * p) / p
    for arg in (g1, g2, 0.25 * ((n + m) * p - 2.0 * n)):
        if not arg > 0:
            raise DomainError("bound undefined: a gamma argument is not positive",
                              threshold=2.0 * n / (n + m))
    bracket = ((p - 1.0) * _lg(0.5 * n) + _lg(0.25 * ((n + m) * p - 2.0 * n))
               - _lg(0.25 * (n + m) * p) + p * _lg(0.25 * (n + m))
               + (2.0 - p) * _lg(g1) - 2.0 * _lg(g2) - _lg(2.0 * g1) + _lg(2.0 * g2))
    return (math.log(2.0 * math.pi) + 2.0 / (n * (2.0 - p)) * bracket
            + 2.0 / n * _lg(n / (2.0 * q))
            + 2.0 * (q - 1.0) / (n * (2.0 - q)) * _lg(n / q))


def _check_nm(n, m, order):
    if int(n) != n or n < 1:
        raise DomainError("n must be a positive integer")
    m = float(m)
    if not m > 0:
        raise DomainError("m must be positive", threshold=0.0)
    p_min = 2.0 * n / (n + m)
    if not order.p > p_min:
        raise DomainError(f"bound undefined for p={order.p:g}: needs p > {p_min:.10g}",
                          threshold=p_min)
    return int(n), m


def _log_k_mellin(mu, nu):
    """ln of the integral of x^mu K_nu(x) over (0, inf)."""
    return ((mu - 1.0) * LN2 + _lg(0.5 * (1.0 + mu + nu))
            + _lg(0.5 * (1.0 + mu - nu)))


def _log_k2_mellin(s, nu):
    """ln of the integral of x^(s-1) K_nu(x)^2 over (0, inf)."""
    nu = abs(nu)
    return (0.5 * LNPI + _lg(0.5 * s) + _lg(0.5 * s - nu) + _lg(0.5 * s + nu)
            - 2.0 * LN2 - _lg(0.5 * (1.0 + s)))


def asymptotic_bound_M_generic(n: int, m: float, p: float) -> float:
    """M(n, m, p) rebuilt from its ingredients, for p != 2.

    The conjugate entropy's log-integral is replaced by the convexity bound
    I(q) <= (2 - q) I(1) + (q - 1) I(2) of the log-moment function, with
    I(1) and I(2) from the Mellin transforms of K and K^2.
    """
    order = EntropyOrder(p)
    n, m = _check_nm(n, m, order)
    if order.shannon:
        raise DomainError("the generic route needs p != 2")
    p, q = order.p, order.q
    nu = 0.25 * (n - m)
    log_s = log_sphere_area(n)
    log_cd, log_ce = _t_consts(n, m)
    lam = 0.5 * p
    h_dir = log_s + (lam * log_cd + _lg(0.5 * n) + _lg(0.5 * (lam * (n + m) - n))
                     - LN2 - _lg(0.5 * lam * (n + m))) / (1.0 - lam)
    shift = 0.25 * (m - n) + n / q
    i1 = _log_k_mellin(shift - 1.0, nu)
    i2 = _log_k2_mellin(2.0 * shift, nu)
    # H_{q/2} = ln S + (q/2 ln C_E + I(q)) / (1 - q/2)
    lam_c = 0.5 * q
    bound_iq = 2.0 * i1 + 2.0 * (q - 1.0) / (2.0 - q) * i2
    h_conj = log_s + lam_c * log_ce / (1.0 - lam_c) + bound_iq
    return (h_dir + h_conj) / n


# ---------------------------------------------------------------- auxiliaries

def babenko_log_constant(p: float) -> float:
    """ln C_{p,q} = -ln(2 pi/p)/(2p) + ln(2 pi/q)/(2q) for p in (1, 2]."""
    p = float(p)
    if not 1.0 < p <= 2.0:
        raise DomainError("Babenko constant needs 1 < p <= 2")
    q = conjugate_exponent(p)
    return (-math.log(2.0 * math.pi / p) / (2.0 * p)
            + math.log(2.0 * math.pi / q) / (2.0 * q))


def entropy_power(h: float, n: int) -> float:
    """N = exp(2 H / n) / (2 pi e)."""
    return math.exp(2.0 * h / n) / (2.0 * math.pi * math.e)


def heisenberg_product(law: EllipticalLaw) -> float:
    """sqrt(E|X|^2 E|X~|^2) / n, at least 1/2 for every law."""
    if law.family is Family.STUDENT_T and not law.m > 2:
        raise DomainError(f"variance diverges for m={law.m:g} <= 2", threshold=2.0)
    direct = moment(law, Side.DIRECT, 2.0)
    conj = moment(law, Side.CONJUGATE, 2.0)
    return math.sqrt(direct * conj) / law.n


def log_beckner_ratio(law: EllipticalLaw, p: float,
                      rel_tol: float = quad.DEFAULT_REL_TOL) -> float:
    """ln h = n (2 - p) (U_p - B(p)) / (2p), the sharpness of the norm inequality.

    Diagnostic only: h = 1 exactly for Gaussians.
    """
    res = usum(law, p, rel_tol)
    return law.n * (2.0 - res.order.p) * res.gap / (2.0 * res.order.p)
