"""Elliptical laws and their radial densities.

An elliptical law in n dimensions with characteristic matrix scale^2 * I is
described by the density of its radius R = |X|. Each law also has a
conjugate: the law whose amplitude is the Fourier transform of sqrt(f).
The three analytic families are

* Gaussian, variance scale^2 / 2 per component (self-conjugate);
* Student-t with m degrees of freedom (heavy tails);
* Student-r with parameter m, supported on the ball of radius ``scale``.

A fourth family takes a user-supplied log radial profile.
"""

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ueplab import quadrature as quad
from ueplab import specfun
from ueplab.errors import DomainError, NonConvergenceError

__all__ = [
    "Family", "Side", "EllipticalLaw", "RadialDensity", "Existence",
    "radial_pdf", "conj_radial_pdf", "hankel_conjugate", "moment",
    "hankel_values", "existence_threshold", "marginal_log_pdf", "log_pdf_nd",
    "radial_power_integral", "radial_log_moment", "radial_entropy_integral",
    "log_sphere_area", "conjugate_exponent",
]

LN2 = math.log(2.0)
LNPI = math.log(math.pi)


class Family(enum.Enum):
    GAUSSIAN = "gaussian"
    STUDENT_T = "student-t"
    STUDENT_R = "student-r"
    CUSTOM = "custom"


class Side(enum.Enum):
    DIRECT = "direct"
    CONJUGATE = "conjugate"


def conjugate_exponent(p):
    """q with 1/p + 1/q = 1; p = inf maps to 1 and p = 1 to inf."""
    p = float(p)
    if p == math.inf:
        return 1.0
    if p == 1.0:
        return math.inf
    return p / (p - 1.0)


def log_sphere_area(n):
    """ln of the surface area 2 pi^(n/2) / Gamma(n/2) of the unit sphere."""
    return LN2 + 0.5 * n * LNPI - specfun.log_gamma(0.5 * n)


@dataclass(frozen=True)
class EllipticalLaw:
    family: Family
    n: int
    m: Optional[float] = None
    scale: float = 1.0
    profile: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        if not isinstance(self.family, Family):
            object.__setattr__(self, "family", Family(self.family))
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"dimension n must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise DomainError("scale must be positive and finite")
        fam = self.family
        if fam in (Family.STUDENT_T, Family.STUDENT_R):
            if self.m is None or not math.isfinite(self.m):
                raise DomainError(f"{fam.value} needs a finite parameter m")
            object.__setattr__(self, "m", float(self.m))
        if fam is Family.STUDENT_T and not self.m > 0:
            raise DomainError("student-t needs m > 0", threshold=0.0)
        if fam is Family.STUDENT_R and not self.m > self.n - 2:
            raise DomainError("student-r needs m > n - 2", threshold=self.n - 2.0)
        if fam is Family.CUSTOM and self.profile is None:
            raise DomainError("custom law needs a log radial profile")

    @classmethod
    def gaussian(cls, n, scale=1.0):
        return cls(Family.GAUSSIAN, n, None, scale)

    @classmethod
    def student_t(cls, n, m, scale=1.0):
        return cls(Family.STUDENT_T, n, m, scale)

    @classmethod
    def student_r(cls, n, m, scale=1.0):
        return cls(Family.STUDENT_R, n, m, scale)

    @classmethod
    def custom(cls, n, profile, scale=1.0):
        """``profile(r)`` returns ln d(r) up to an additive constant."""
        return cls(Family.CUSTOM, n, None, scale, profile)

    def with_scale(self, scale):
        return EllipticalLaw(self.family, self.n, self.m, scale, self.profile)

    def describe(self):
        if self.m is None:
            return f"{self.family.value}(n={self.n})"
        return f"{self.family.value}(n={self.n}, m={self.m:g})"


@dataclass(frozen=True)
class Tail:
    kind: str                       # exponential | power | compact | oscillatory
    exponent: Optional[float] = None
    order: Optional[float] = None
    power: Optional[float] = None


@dataclass(frozen=True)
class RadialDensity:
    """Density D of R on [0, upper) in closed or numerical form.

    ``log_pdf`` gives ln D for arrays of radii. For compact support,
    ``log_pdf_upper(t)`` gives ln D(upper - t) without cancellation.
    ``left_exponent``/``right_exponent`` describe D ~ r^s at 0 and
    D ~ (upper - r)^s at the top of a compact support. Oscillatory
    densities also record ``oscillatory = (ln c, a, nu, q)`` meaning
    D(r) = c (r/l)^a |J_nu(r/l)|^q / l with l = ``length``.
    """

    n: int
    log_pdf: Callable
    tail: Tail
    upper: float = math.inf
    length: float = 1.0
    left_exponent: Optional[float] = None
    right_exponent: Optional[float] = None
    log_pdf_upper: Optional[Callable] = None
    oscillatory: Optional[tuple] = None
    label: str = ""

    @property
    def support(self):
        return "half-line" if self.upper == math.inf else "interval"

    def pdf(self, r):
        r = np.asarray(r, dtype=float)
        return np.exp(self.log_pdf(r))


# ---------------------------------------------------------------- constants

def _lg(x):
    return specfun.log_gamma(x)


def _t_consts(n, m):
    log_cd = LN2 + _lg(0.5 * (n + m)) - _lg(0.5 * n) - _lg(0.5 * m)
    log_ce = ((3.0 - 0.5 * (n + m)) * LN2 + _lg(0.5 * (n + m)) - _lg(0.5 * n)
              - _lg(0.5 * m) - 2.0 * _lg(0.25 * (n + m)))
    return log_cd, log_ce


def _r_consts(n, m):
    lam0 = 0.5 * (m - n) + 1.0
    log_cd = LN2 + _lg(0.5 * m + 1.0) - _lg(0.5 * n) - _lg(lam0)
    log_ce = (lam0 * LN2 + _lg(0.5 * m + 1.0) + 2.0 * _lg(0.25 * (m - n) + 1.0)
              - _lg(0.5 * n) - _lg(lam0))
    return log_cd, log_ce


def _log_r(r):
    with np.errstate(divide="ignore"):
        return np.log(r)


def _pow_log(k, r):
    # k ln r with the k = 0 case exactly 0, also at r = 0
    if k == 0:
        return np.zeros(np.shape(r))
    return k * _log_r(r)


def _scaled(n, unit_log, length, tail, upper=math.inf, **kw):
    """Wrap a unit-length log density as D(r) = D1(r/l)/l."""
    log_l = math.log(length)
    if length == 1.0:
        log_pdf = unit_log
    else:
        def log_pdf(r):
            return unit_log(np.asarray(r, dtype=float) / length) - log_l
    upper_fn = kw.pop("unit_upper", None)
    if upper_fn is not None and length != 1.0:
        def log_pdf_upper(t):
            return upper_fn(np.asarray(t, dtype=float) / length) - log_l
    else:
        log_pdf_upper = upper_fn
    return RadialDensity(n, log_pdf, tail, upper * length, length,
                         log_pdf_upper=log_pdf_upper, **kw)


# ---------------------------------------------------------------- densities

def _gaussian_unit(n):
    log_c = LN2 - _lg(0.5 * n)

    def log_pdf(r):
        r = np.asarray(r, dtype=float)
        return log_c + _pow_log(n - 1, r) - r * r
    return log_pdf


def _custom_unit(law):
    n = law.n
    prof = law.profile

    def raw(r):
        r = np.asarray(r, dtype=float)
        return _pow_log(n - 1, r) + np.asarray(prof(r), dtype=float)

    res = quad.integrate_log(raw, quad.ExponentialTail(0.0, n - 1.0), 1e-11)
    if not (res.converged and math.isfinite(res.log_abs_value) and res.sign > 0):
        raise DomainError("custom profile does not have a finite normalisation")
    log_norm = res.log_abs_value

    def log_pdf(r):
        return raw(r) - log_norm
    return log_pdf


def radial_pdf(law: EllipticalLaw) -> RadialDensity:
    """Radial density of the law itself."""
    n, m, s = law.n, law.m, law.scale
    fam = law.family
    label = f"direct {law.describe()}"
    if fam is Family.GAUSSIAN:
        return _scaled(n, _gaussian_unit(n), s, Tail("exponential"),
                       left_exponent=n - 1.0, label=label)
    if fam is Family.STUDENT_T:
        log_cd, _ = _t_consts(n, m)
        half = 0.5 * (n + m)

        def log_pdf(r):
            r = np.asarray(r, dtype=float)
            return log_cd + _pow_log(n - 1, r) - half * np.log1p(r * r)
        return _scaled(n, log_pdf, s, Tail("power", exponent=-(m + 1.0)),
                       left_exponent=n - 1.0, label=label)
    if fam is Family.STUDENT_R:
        log_cd, _ = _r_consts(n, m)
        e = 0.5 * (m - n)

        def log_pdf(r):
            r = np.asarray(r, dtype=float)
            inside = (r >= 0) & (r < 1)
            rr = np.where(inside, r, 0.5)
            with np.errstate(divide="ignore"):
                val = log_cd + _pow_log(n - 1, rr) + e * np.log1p(-rr * rr)
            return np.where(inside, val, -np.inf)

        def log_pdf_upper(t):
            # ln D(1 - t): 1 - r^2 = t (2 - t)
            t = np.asarray(t, dtype=float)
            with np.errstate(divide="ignore"):
                return (log_cd + (n - 1) * np.log1p(-t)
                        + e * (np.log(t) + np.log(2.0 - t)))
        return _scaled(n, log_pdf, s, Tail("compact", exponent=e), upper=1.0,
                       left_exponent=n - 1.0, right_exponent=e,
                       unit_upper=log_pdf_upper, label=label)
    return _scaled(n, _custom_unit(law), s, Tail("exponential"),
                   left_exponent=n - 1.0, label=label)


def conj_radial_pdf(law: EllipticalLaw) -> RadialDensity:
    """Radial density of the conjugate law."""
    n, m, s = law.n, law.m, law.scale
    fam = law.family
    inv = 1.0 / s
    label = f"conjugate {law.describe()}"
    if fam is Family.GAUSSIAN:
        return _scaled(n, _gaussian_unit(n), inv, Tail("exponential"),
                       left_exponent=n - 1.0, label=label)
    if fam is Family.STUDENT_T:
        _, log_ce = _t_consts(n, m)
        nu = 0.25 * (n - m)
        a = 0.5 * (n + m) - 1.0

        def log_pdf(r):
            r = np.asarray(r, dtype=float)
            out = np.full(r.shape, -np.inf)
            pos = r > 0
            rp = r[pos]
            out[pos] = (log_ce + a * np.log(rp)
                        + 2.0 * (specfun.log_bessel_k_scaled(nu, rp) - rp))
            return out
        return _scaled(n, log_pdf, inv, Tail("exponential"),
                       left_exponent=a - 2.0 * abs(nu) - (_LOG_EPS if nu == 0 else 0.0),
                       label=label)
    if fam is Family.STUDENT_R:
        _, log_ce = _r_consts(n, m)
        nu = 0.25 * (m + n)
        a = -0.5 * (m - n) - 1.0

        def log_pdf(r):
            r = np.asarray(r, dtype=float)
            la, _ = specfun.log_abs_bessel_j(nu, r)
            with np.errstate(divide="ignore", invalid="ignore"):
                out = log_ce + a * _log_r(r) + 2.0 * la
            return np.where(r > 0, out, -np.inf if a + 2 * nu > 0 else out)
        return _scaled(n, log_pdf, inv, Tail("oscillatory", exponent=a - 1.0,
                                             order=nu, power=2.0),
                       left_exponent=a + 2.0 * nu,
                       oscillatory=(log_ce, a, nu, 2.0), label=label)
    raise DomainError("custom laws have no closed-form conjugate; "
                      "use hankel_conjugate(radial_pdf(law))")


# ---------------------------------------------------------------- integrals

def _support_integral(d, f_log, sign, s_left, s_right, tail_exp, rel_tol,
                      upper_log=None, upper_sign=None, split_at_one=False):
    """Integrate sign * exp(f_log) over the support of ``d``.

    ``s_left``/``s_right`` are the integrand's endpoint exponents and
    ``tail_exp`` its power at infinity (None for faster decay). On a compact
    support the upper half is integrated in t = upper - r through
    ``upper_log``/``upper_sign`` when given.
    """
    if d.upper == math.inf:
        cut = 1.0 * d.length if split_at_one else None
        if cut is None:
            dom = (quad.PowerTail(0.0, tail_exp, s_left) if tail_exp is not None
                   else quad.ExponentialTail(0.0, s_left))
            return quad.integrate_log(f_log, dom, rel_tol, sign=sign)
        low = quad.integrate_log(f_log, quad.Finite(0.0, cut, s_left, None),
                                 rel_tol, sign=sign)

        def g_log(u):
            return f_log(cut + np.asarray(u))

        g_sign = None if sign is None else (lambda u: sign(cut + np.asarray(u)))
        dom = (quad.PowerTail(0.0, tail_exp, None) if tail_exp is not None
               else quad.ExponentialTail(0.0, None))
        high = quad.integrate_log(g_log, dom, rel_tol, sign=g_sign)
        return quad._combine([low, high])
    half = 0.5 * d.upper
    low = quad.integrate_log(f_log, quad.Finite(0.0, half, s_left, None),
                             rel_tol, sign=sign)
    if upper_log is None:
        high = quad.integrate_log(f_log, quad.Finite(half, d.upper, None, s_right),
                                  rel_tol, sign=sign)
    else:
        high = quad.integrate_log(upper_log, quad.Finite(0.0, half, s_right, None),
                                  rel_tol, sign=upper_sign)
    return quad._combine([low, high])


def _shift(res, log_factor):
    return quad.LogQuadResult(res.log_abs_value + log_factor, res.sign,
                              res.log_abs_error + log_factor, res.evaluations,
                              res.converged)


def _from_value(val, err, evaluations, converged):
    return quad.LogQuadResult(math.log(abs(val)) if val else -math.inf,
                              math.copysign(1.0, val) if val else 0.0,
                              math.log(err) if err > 0 else -math.inf,
                              evaluations, converged)


# a logarithmic factor at an endpoint is declared as a slightly smaller power
_LOG_EPS = 1e-9


def radial_power_integral(d: RadialDensity, lam: float, r_power: float = 0.0,
                          rel_tol: float = quad.DEFAULT_REL_TOL):
    """Integral of r^r_power D(r)^lam over the support, as a LogQuadResult."""
    lam = float(lam)
    if d.oscillatory is not None:
        log_c, a, nu, q = d.oscillatory
        # u = r / l turns r^c D^lam dr into l^(c + 1 - lam) u^c D1(u)^lam du
        res = quad.integrate_oscillatory(r_power + lam * a, nu, q * lam, rel_tol)
        return _shift(res, lam * log_c + (r_power + 1.0 - lam) * math.log(d.length))

    s_left = None if d.left_exponent is None else lam * d.left_exponent + r_power
    s_right = None if d.right_exponent is None else lam * d.right_exponent
    if s_left is not None and s_left <= -1.0:
        raise DomainError("integral diverges at the origin")
    if s_right is not None and s_right <= -1.0:
        raise DomainError("integral diverges at the edge of the support")
    tail_exp = None
    if d.tail.kind == "power":
        tail_exp = lam * d.tail.exponent + r_power
        if not tail_exp < -1.0:
            raise DomainError("integral diverges at infinity")

    def f_log(r):
        return _pow_log(r_power, r) + lam * d.log_pdf(r)

    upper = None
    if d.log_pdf_upper is not None:
        top = d.upper

        def upper(t):
            t = np.asarray(t, dtype=float)
            return r_power * np.log(top - t) + lam * d.log_pdf_upper(t)
    return _support_integral(d, f_log, None, s_left, s_right, tail_exp, rel_tol,
                             upper)


def radial_log_moment(d: RadialDensity, rel_tol: float = quad.DEFAULT_REL_TOL):
    """E[ln R] under D, as a signed LogQuadResult."""
    if d.oscillatory is not None:
        log_c, a, nu, q = d.oscillatory
        res = _shift(quad.integrate_oscillatory(a, nu, q, rel_tol, weight="log_r"),
                     log_c)
        # E[ln R] = E1[ln U] + ln l
        return _from_value(res.value + math.log(d.length), res.abs_error_estimate,
                           res.evaluations, res.converged)

    def f_log(r):
        with np.errstate(divide="ignore"):
            return d.log_pdf(r) + np.log(np.abs(_log_r(r)))

    def sign(r):
        return np.sign(_log_r(r))

    upper = upper_sign = None
    if d.log_pdf_upper is not None:
        top = d.upper

        def upper(t):
            with np.errstate(divide="ignore"):
                return d.log_pdf_upper(t) + np.log(np.abs(np.log(top - np.asarray(t))))

        def upper_sign(t):
            return np.sign(np.log(top - np.asarray(t)))
    s_left = None if d.left_exponent is None else d.left_exponent - _LOG_EPS
    tail_exp = None if d.tail.kind != "power" else d.tail.exponent + _LOG_EPS
    return _support_integral(d, f_log, sign, s_left, d.right_exponent, tail_exp,
                             rel_tol, upper, upper_sign,
                             split_at_one=d.upper == math.inf)


def radial_entropy_integral(d: RadialDensity, rel_tol: float = quad.DEFAULT_REL_TOL):
    """Integral of D ln D over the support, as a signed LogQuadResult."""
    if d.oscillatory is not None:
        log_c, a, nu, q = d.oscillatory
        # D1 ln D1 = D1 (ln c + a ln u + ln|J|^q); rescaling adds -ln l
        p1 = quad.integrate_oscillatory(a, nu, q, rel_tol, weight="log_r")
        p2 = quad.integrate_oscillatory(a, nu, q, rel_tol, weight="log_power")
        c = math.exp(log_c)
        val = log_c - math.log(d.length) + c * (a * p1.value + p2.value)
        err = c * (abs(a) * p1.abs_error_estimate + p2.abs_error_estimate)
        return _from_value(val, err, p1.evaluations + p2.evaluations,
                           p1.converged and p2.converged)

    def x_log_x(lp):
        with np.errstate(divide="ignore", invalid="ignore"):
            out = lp + np.log(np.abs(lp))
        return np.where(np.isfinite(lp), out, -np.inf)

    def f_log(r):
        return x_log_x(d.log_pdf(r))

    def sign(r):
        return np.sign(d.log_pdf(r))

    upper = upper_sign = None
    if d.log_pdf_upper is not None:
        def upper(t):
            return x_log_x(d.log_pdf_upper(t))

        def upper_sign(t):
            return np.sign(d.log_pdf_upper(t))
    s_left = None if d.left_exponent is None else d.left_exponent - _LOG_EPS
    s_right = None if d.right_exponent is None else d.right_exponent - _LOG_EPS
    tail_exp = None if d.tail.kind != "power" else d.tail.exponent + _LOG_EPS
    return _support_integral(d, f_log, sign, s_left, s_right, tail_exp, rel_tol,
                             upper, upper_sign)


# ---------------------------------------------------------------- Hankel

def _hankel_order(n):
    return 0.5 * n - 1.0


def _kernel_log(nu, x):
    """ln|sqrt(x) J_nu(x)| and its sign, including nu = -1/2."""
    x = np.asarray(x, dtype=float)
    if nu == -0.5:
        c = np.cos(x)
        with np.errstate(divide="ignore"):
            return 0.5 * math.log(2.0 / math.pi) + np.log(np.abs(c)), np.sign(c)
    la, sg = specfun.log_abs_bessel_j(nu, x)
    with np.errstate(divide="ignore"):
        return la + 0.5 * np.log(x), sg


def _kernel_zeros(nu, count):
    if nu == -0.5:
        return (np.arange(1, count + 1) - 0.5) * math.pi
    return specfun.bessel_j_zeros(nu, count)


def _hankel_amplitude(d, r, rel_tol):
    n = d.n
    nu = _hankel_order(n)
    left = None if d.left_exponent is None else 0.5 * d.left_exponent + nu + 0.5

    def f_log(rho):
        k, _ = _kernel_log(nu, rho * r)
        return 0.5 * d.log_pdf(rho) + k

    def sign(rho):
        return _kernel_log(nu, rho * r)[1]

    pieces = []
    if d.upper != math.inf:
        # compact support: finitely many sign changes
        zeros = []
        count = 16
        while True:
            z = _kernel_zeros(nu, count) / r
            if z[-1] >= d.upper:
                zeros = list(z[z < d.upper])
                break
            count *= 2
        edges = [0.0] + zeros
        for i, (lo, hi) in enumerate(zip(edges, edges[1:] + [None])):
            if hi is None:
                break
            pieces.append(quad.integrate_log(
                f_log, quad.Finite(lo, hi, left if i == 0 else None), rel_tol,
                sign=sign))
        lo = edges[-1]
        upper = d.upper
        s_right = None if d.right_exponent is None else 0.5 * d.right_exponent

        def g_log(t):
            t = np.asarray(t, dtype=float)
            k, _ = _kernel_log(nu, (upper - t) * r)
            return 0.5 * d.log_pdf_upper(t) + k

        def g_sign(t):
            return _kernel_log(nu, (upper - np.asarray(t, dtype=float)) * r)[1]
        if d.log_pdf_upper is not None:
            pieces.append(quad.integrate_log(
                g_log, quad.Finite(0.0, upper - lo, s_right,
                                   left if lo == 0.0 else None), rel_tol,
                sign=g_sign))
        else:
            pieces.append(quad.integrate_log(f_log, quad.Finite(lo, upper, None, s_right),
                                             rel_tol, sign=sign))
        res = quad._combine(pieces)
        return res.value, res.abs_error_estimate
    # half-line: arches between kernel zeros, partial sums accelerated
    count = 64
    zeros = _kernel_zeros(nu, count) / r
    partial = []
    total = 0.0
    err = 0.0
    lo = 0.0
    for k in range(4000):
        if k >= len(zeros):
            count *= 2
            zeros = _kernel_zeros(nu, count) / r
        hi = float(zeros[k])
        res = quad.integrate_log(f_log, quad.Finite(lo, hi, left if k == 0 else None),
                                 0.1 * rel_tol, sign=sign)
        total += res.value
        err += res.abs_error_estimate
        partial.append(total)
        lo = hi
        if abs(res.value) <= 1e-3 * rel_tol * abs(total) and k > 2:
            return total, err + abs(res.value)
        if len(partial) >= 8:
            est, est_err = quad.wynn_epsilon(partial[-24:])
            if est_err <= 0.1 * rel_tol * abs(est):
                return est, est_err + err
    raise NonConvergenceError(f"Hankel transform did not converge at r={r}")


def hankel_values(d: RadialDensity, r, rel_tol: float = 1e-9):
    """Conjugate radial density at the radii ``r`` by direct quadrature.

    E(r) = (integral of sqrt(rho r) sqrt(D(rho)) J_{n/2-1}(rho r) drho)^2.
    """
    arr = np.atleast_1d(np.asarray(r, dtype=float))
    out = np.empty(arr.shape)
    flat = out.reshape(-1)
    for i, ri in enumerate(arr.reshape(-1)):
        if not ri > 0:
            raise DomainError("the Hankel transform is evaluated at r > 0")
        amp, _ = _hankel_amplitude(d, float(ri), rel_tol)
        flat[i] = amp * amp
    return out if np.ndim(r) else float(out[0])


def hankel_conjugate(d: RadialDensity, rel_tol: float = 1e-9) -> RadialDensity:
    """Conjugate radial density computed numerically from ``d``.

    Each evaluation runs one Hankel-transform quadrature per radius, so the
    result suits pointwise checks and custom profiles rather than inner
    loops.
    """
    def log_pdf(r):
        r = np.asarray(r, dtype=float)
        out = np.full(r.shape, -np.inf)
        pos = r > 0
        if pos.any():
            with np.errstate(divide="ignore"):
                out[pos] = np.log(hankel_values(d, r[pos], rel_tol))
        return out
    return RadialDensity(d.n, log_pdf, Tail("exponential"), math.inf, 1.0 / d.length,
                         left_exponent=d.n - 1.0, label=f"hankel of {d.label}")


# ---------------------------------------------------------------- moments

def _k2_mellin(s, nu):
    """ln of the integral of t^(s-1) K_nu(t)^2 over (0, inf)."""
    return (0.5 * LNPI + _lg(0.5 * s) + _lg(0.5 * s - abs(nu)) + _lg(0.5 * s + abs(nu))
            - 2.0 * LN2 - _lg(0.5 * (1.0 + s)))


def _j2_mellin(lam, nu):
    """ln of the integral of t^(-lam) J_nu(t)^2 over (0, inf), 0 < lam < 2 nu + 1."""
    return (_lg(lam) + _lg(nu - 0.5 * lam + 0.5) - lam * LN2
            - 2.0 * _lg(0.5 * (1.0 + lam)) - _lg(nu + 0.5 * lam + 0.5))


def moment(law: EllipticalLaw, side: Side, k: float,
           rel_tol: float = quad.DEFAULT_REL_TOL) -> float:
    """E[R^k] for the law (``Side.DIRECT``) or its conjugate."""
    k = float(k)
    if not k >= 0:
        raise DomainError("moment order must be >= 0")
    if k == 0:
        return 1.0
    side = Side(side)
    n, m = law.n, law.m
    fam = law.family
    length = law.scale if side is Side.DIRECT else 1.0 / law.scale
    log_scale = k * math.log(length)
    if fam is Family.GAUSSIAN:
        return math.exp(_lg(0.5 * (n + k)) - _lg(0.5 * n) + log_scale)
    if fam is Family.STUDENT_T:
        if side is Side.DIRECT:
            if not k < m:
                raise DomainError(f"moment of order {k} diverges for m={m}", threshold=m)
            return math.exp(_lg(0.5 * (n + k)) + _lg(0.5 * (m - k)) - _lg(0.5 * n)
                            - _lg(0.5 * m) + log_scale)
        _, log_ce = _t_consts(n, m)
        s = 0.5 * (n + m) + k
        return math.exp(log_ce + _k2_mellin(s, 0.25 * (n - m)) + log_scale)
    if fam is Family.STUDENT_R:
        if side is Side.DIRECT:
            return math.exp(_lg(0.5 * (n + k)) + _lg(0.5 * m + 1.0) - _lg(0.5 * n)
                            - _lg(0.5 * (m + k) + 1.0) + log_scale)
        lam0 = 0.5 * (m - n) + 1.0
        if not k < lam0:
            raise DomainError(
                f"conjugate moment of order {k} diverges (needs k < {lam0:g})",
                threshold=lam0)
        _, log_ce = _r_consts(n, m)
        return math.exp(log_ce + _j2_mellin(lam0 - k, 0.25 * (m + n)) + log_scale)
    d = radial_pdf(law)
    if side is Side.CONJUGATE:
        d = hankel_conjugate(d)
    res = radial_power_integral(d, 1.0, k, rel_tol)
    if not res.converged:
        raise DomainError(f"moment of order {k} does not converge")
    return res.value


# ---------------------------------------------------------------- existence

@dataclass(frozen=True)
class Existence:
    """Admissible orders: p_min < p < p_max and q_min < q < q_max."""

    p_min: float
    q_min: float
    p_max: float = math.inf
    q_max: float = math.inf

    def admits(self, p):
        q = conjugate_exponent(p)
        return (p > max(self.p_min, 1.0) and p < self.p_max
                and q > self.q_min and q < self.q_max)


def existence_threshold(law: EllipticalLaw) -> Existence:
    """Smallest orders for which both Renyi entropies in the sum exist."""
    n, m = law.n, law.m
    if law.family is Family.STUDENT_T:
        p_min = 2.0 * n / (n + m)
        q_max = conjugate_exponent(p_min) if p_min > 1.0 else math.inf
        return Existence(p_min, 1.0, math.inf, q_max)
    if law.family is Family.STUDENT_R:
        q_min = 4.0 * n / (m + n + 2.0)
        p_max = conjugate_exponent(q_min) if q_min > 1.0 else math.inf
        if m < n:
            p_max = min(p_max, 4.0 / (n - m))
        return Existence(1.0, q_min, p_max, math.inf)
    return Existence(1.0, 1.0)


# ---------------------------------------------------------------- n-d densities

def log_pdf_nd(law: EllipticalLaw, radius, one_minus_r2=None):
    """ln f(x) as a function of |x| for the n-dimensional density.

    For Student-r, ``one_minus_r2`` may pass 1 - (|x|/scale)^2 computed
    without cancellation near the boundary.
    """
    n, m, s = law.n, law.m, law.scale
    r = np.asarray(radius, dtype=float) / s
    shift = -n * math.log(s)
    fam = law.family
    if fam is Family.GAUSSIAN:
        return -0.5 * n * LNPI - r * r + shift
    if fam is Family.STUDENT_T:
        c = _lg(0.5 * (n + m)) - _lg(0.5 * m) - 0.5 * n * LNPI
        return c - 0.5 * (n + m) * np.log1p(r * r) + shift
    if fam is Family.STUDENT_R:
        c = _lg(0.5 * m + 1.0) - _lg(0.5 * (m - n) + 1.0) - 0.5 * n * LNPI
        if one_minus_r2 is None:
            one_minus_r2 = 1.0 - r * r
            inside = r < 1.0
            rr = np.where(inside, r, 0.0)
            with np.errstate(divide="ignore"):
                val = c + 0.5 * (m - n) * np.log1p(-rr * rr) + shift
        else:
            one_minus_r2 = np.asarray(one_minus_r2, dtype=float)
            inside = one_minus_r2 > 0.0
            with np.errstate(divide="ignore", invalid="ignore"):
                val = c + 0.5 * (m - n) * np.log(one_minus_r2) + shift
        return np.where(inside, val, -np.inf)
    d = radial_pdf(law)
    rs = np.asarray(radius, dtype=float)
    with np.errstate(divide="ignore"):
        return d.log_pdf(rs) - log_sphere_area(n) - _pow_log(n - 1, rs)


def marginal_log_pdf(law: EllipticalLaw, k: int, x):
    """ln density of the first k coordinates at points ``x`` (shape (..., k)).

    Student-t and Student-r marginals stay in their family with the same m.
    """
    if int(k) != k or not 1 <= k < law.n:
        raise DomainError(f"marginal dimension must satisfy 1 <= k < n={law.n}")
    if law.family is Family.CUSTOM:
        raise DomainError("marginals are only available for the analytic families")
    x = np.asarray(x, dtype=float)
    if k == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    if x.shape[-1] != k:
        raise DomainError(f"points must have last dimension {k}")
    sub = EllipticalLaw(law.family, int(k), law.m, law.scale)
    radius = np.sqrt(np.sum(x * x, axis=-1))
    return log_pdf_nd(sub, radius)
