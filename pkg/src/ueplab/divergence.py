"""KL and total-variation divergences between elliptical laws.

Two elliptical laws with the same characteristic matrix differ only
through their radii, so both divergences reduce to one-dimensional
integrals over the radial densities. Closed forms are provided for
Student-t and Student-r against the Gaussian of equal covariance.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from ueplab import quadrature as quad
from ueplab import specfun
from ueplab.errors import DomainError, NonConvergenceError
from ueplab.radial import EllipticalLaw, Family, RadialDensity

__all__ = [
    "KLReport", "kl_radial", "tv_radial", "df_bound", "matched_gaussian",
    "kl_studentt_gaussian", "kl_gaussian_studentt", "kl_studentr_gaussian",
    "j_integral", "j_bounds",
]

LN2 = math.log(2.0)

# an O(1) degree of freedom below this uses the linear-growth expansion
_SMALL_M = 10.0


def _lg(x):
    return specfun.log_gamma(x)


def _psi(x):
    return specfun.digamma(x)


@dataclass(frozen=True)
class KLReport:
    forward: Optional[float] = None
    reverse: Optional[float] = None
    j_integral: Optional[float] = None
    j_lower: Optional[float] = None
    j_upper: Optional[float] = None
    asymptotic: Optional[float] = None
    n: int = 1

    @property
    def rate_forward(self):
        return None if self.forward is None else self.forward / self.n

    @property
    def rate_reverse(self):
        return None if self.reverse is None else self.reverse / self.n


def matched_gaussian(law: EllipticalLaw) -> EllipticalLaw:
    """Gaussian with the same covariance as a Student-t (m > 2) or Student-r law.

    The covariance is scale^2/(m-2) per component for Student-t and
    scale^2/(m+2) for Student-r; the Gaussian's variance is scale^2/2.
    """
    if law.family is Family.STUDENT_T:
        if not law.m > 2:
            raise DomainError("covariance exists only for m > 2", threshold=2.0)
        var = law.scale ** 2 / (law.m - 2.0)
    elif law.family is Family.STUDENT_R:
        var = law.scale ** 2 / (law.m + 2.0)
    elif law.family is Family.GAUSSIAN:
        return law
    else:
        raise DomainError("matched Gaussian needs an analytic family")
    return EllipticalLaw.gaussian(law.n, math.sqrt(2.0 * var))


# ---------------------------------------------------------------- radial integrals

def _log_pdf_safe(d, r):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.asarray(d.log_pdf(np.asarray(r, dtype=float)), dtype=float)


def _tail_exponent(f_log, start):
    """Power-law exponent of exp(f_log) at infinity, probed numerically.

    Returns None for faster-than-power decay.
    """
    r = max(start, 1.0) * np.array([1e6, 1e7, 1e8])
    v = np.asarray(f_log(r), dtype=float)
    if np.all(v == -np.inf):
        return None
    s1 = (v[1] - v[0]) / math.log(10.0)
    s2 = (v[2] - v[1]) / math.log(10.0)
    if not (np.isfinite(s1) and np.isfinite(s2)):
        return None
    if s2 < -50:
        return None
    # slowly varying factors (logarithms) are absorbed by a small margin
    return max(s1, s2) + 1e-3


def _integrate_pair(dy, dz, lo, hi, g_log, g_sign, rel_tol, abs_tol=0.0):
    """Integrate g(ln dy, ln dz) over [lo, hi] within dy's support.

    ``g_log(ly, lz)`` returns ln|g| and ``g_sign(ly, lz)`` its sign. Near a
    compact upper edge the radius is parametrised as upper - t so the log
    densities come from ``log_pdf_upper`` without cancellation. Pieces stop
    refining once their error is below ``abs_tol``.
    """
    lat = math.log(abs_tol) if abs_tol > 0 else -math.inf

    def run(fn, dom, sign):
        return quad.integrate_log(fn, dom, rel_tol, sign=sign, log_abs_tol=lat)

    def logs(r):
        return _log_pdf_safe(dy, r), _log_pdf_safe(dz, r)

    def f_log(r):
        return g_log(*logs(r))

    f_sign = None if g_sign is None else (lambda r: g_sign(*logs(r)))
    s_left = None
    if lo == 0.0 and dy.left_exponent is not None:
        s_left = dy.left_exponent - 1e-9
    if hi == math.inf:
        exp = _tail_exponent(f_log, max(lo, dy.length))
        if exp is not None and exp >= -1.0:
            return None
        dom = (quad.PowerTail(lo, exp, s_left) if exp is not None
               else quad.ExponentialTail(lo, s_left))
        if lo > 0.0:
            def shifted(u):
                return f_log(lo + np.asarray(u))
            sh_sign = None if f_sign is None else (lambda u: f_sign(lo + np.asarray(u)))
            dom = (quad.PowerTail(0.0, exp, None) if exp is not None
                   else quad.ExponentialTail(0.0, None))
            return run(shifted, dom, sh_sign)
        return run(f_log, dom, f_sign)
    if hi == dy.upper and dy.log_pdf_upper is not None:
        upper = dy.upper
        mid = 0.5 * (lo + hi)
        first = run(f_log, quad.Finite(lo, mid, s_left, None), f_sign)
        s_right = None if dy.right_exponent is None else dy.right_exponent - 1e-9

        shared = dz.upper == upper and dz.log_pdf_upper is not None

        def upper_logs(t):
            t = np.asarray(t, dtype=float)
            with np.errstate(divide="ignore", invalid="ignore"):
                ly = dy.log_pdf_upper(t)
                lz = dz.log_pdf_upper(t) if shared else _log_pdf_safe(dz, upper - t)
            return ly, lz

        def h_log(t):
            return g_log(*upper_logs(t))

        h_sign = None if g_sign is None else (lambda t: g_sign(*upper_logs(t)))
        second = run(h_log, quad.Finite(0.0, hi - mid, s_right, None), h_sign)
        return quad._combine([first, second])
    return run(f_log, quad.Finite(lo, hi, s_left, None), f_sign)


def _check_pair(dy, dz):
    if dy.n != dz.n:
        raise DomainError("densities must share the dimension n")


def kl_radial(dy: RadialDensity, dz: RadialDensity,
              rel_tol: float = 1e-11) -> float:
    """D_kl(Y || Z) from the radial densities; inf when Y has mass where Z has none."""
    _check_pair(dy, dz)
    if dy.upper > dz.upper:
        return math.inf

    def g_log(ly, lz):
        with np.errstate(divide="ignore", invalid="ignore"):
            out = ly + np.log(np.abs(ly - lz))
        return np.where(np.isfinite(ly) & np.isfinite(out), out, -np.inf)

    def g_sign(ly, lz):
        with np.errstate(invalid="ignore"):
            dl = ly - lz
        return np.where(np.isfinite(dl), np.sign(dl), 0.0)

    res = _integrate_pair(dy, dz, 0.0, dy.upper, g_log, g_sign, rel_tol, 1e-14)
    if res is None:
        return math.inf
    if not res.converged:
        raise NonConvergenceError("KL quadrature did not converge")
    return res.value


def _crossings(dy, dz):
    """Radii inside dy's support where ln dy - ln dz changes sign."""
    ell = dy.length
    if dy.upper == math.inf:
        grid = ell * np.geomspace(1e-6, 1e4, 801)
    else:
        u = dy.upper
        grid = np.concatenate([u * np.geomspace(1e-6, 0.5, 300),
                               u - u * np.geomspace(0.5, 1e-9, 300)[1:]])

    def h(r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        return _log_pdf_safe(dy, r) - _log_pdf_safe(dz, r)

    vals = h(grid)
    out = []
    for i in range(len(grid) - 1):
        a, b = vals[i], vals[i + 1]
        if not (np.isfinite(a) and np.isfinite(b)):
            continue
        if a == 0.0:
            out.append(float(grid[i]))
        elif a * b < 0.0:
            out.append(brentq(lambda x: float(h(x)[0]), grid[i], grid[i + 1],
                              xtol=1e-15, rtol=1e-15))
    return out


def tv_radial(dy: RadialDensity, dz: RadialDensity, rel_tol: float = 1e-10) -> float:
    """L1 distance of the radial densities, in [0, 2].

    Both densities integrate to one, so the distance is twice the integral
    of (dy - dz) over the set where dy exceeds dz; that set is delimited by
    the sign changes of ln dy - ln dz.
    """
    _check_pair(dy, dz)
    edges = [0.0] + _crossings(dy, dz) + [dy.upper]

    def g_log(ly, lz):
        with np.errstate(divide="ignore", invalid="ignore"):
            # ln(dy - dz) = ln dy + ln(1 - exp(lz - ly)), clamped where dy <= dz
            x = np.minimum(lz - ly, 0.0)
            out = ly + np.log(-np.expm1(x))
        return np.where(np.isfinite(out), out, -np.inf)

    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi <= lo:
            continue
        mid = 0.5 * (lo + hi) if hi != math.inf else lo + dy.length
        ly = _log_pdf_safe(dy, np.array([mid]))[0]
        lz = _log_pdf_safe(dz, np.array([mid]))[0]
        if not ly > lz:
            continue
        res = _integrate_pair(dy, dz, lo, hi, g_log, None, rel_tol, 1e-14)
        if res is None:
            raise NonConvergenceError("TV tail does not decay")
        if not res.converged:
            raise NonConvergenceError("TV quadrature did not converge")
        total += res.value
    return min(2.0, max(0.0, 2.0 * total))


def df_bound(n: int, m: int) -> float:
    """Diaconis-Freedman bound 2(n+3)/(m-n-1) for integers 1 <= n <= m-2."""
    if int(n) != n or int(m) != m:
        raise DomainError("the bound is stated for integer n and m")
    if not 1 <= n <= m - 2:
        raise DomainError("the bound needs 1 <= n <= m - 2", threshold=m - 2)
    return 2.0 * (n + 3.0) / (m - n - 1.0)


# ---------------------------------------------------------------- closed forms

# Bernoulli numbers B_2k for the Stirling tails of log-gamma and digamma
_BERNOULLI = (1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6,
              -3617 / 510, 43867 / 798, -174611 / 330)
_STIRLING_MIN = 10.0


def _log1p_minus(u):
    """log1p(u) - u without cancellation for small u."""
    if abs(u) > 0.5:
        return math.log1p(u) - u
    total, term, k = 0.0, u, 1
    while True:
        k += 1
        term *= -u
        step = term / k
        total += step
        if abs(step) <= 1e-17 * abs(total):
            return total


def _stirling_tail_diffs(z, d):
    """(S(z+d) - S(z), T(z+d) - T(z)) for the Stirling tails.

    S is the remainder of log-gamma after (z - 1/2) ln z - z + ln(2 pi)/2 and
    T that of digamma after ln z - 1/(2z). Powers are differenced through
    expm1 so small d keeps full relative accuracy. Needs z, z+d >= 10.
    """
    lr = math.log1p(d / z)
    s_diff = t_diff = 0.0
    for k, b in enumerate(_BERNOULLI, start=1):
        j = 2 * k
        s_diff += b / (j * (j - 1)) * z ** (1 - j) * math.expm1((1 - j) * lr)
        t_diff += b / j * z ** -j * math.expm1(-j * lr)
    # T(z) = sum B_2k / (2k z^2k) enters digamma with a minus sign
    return s_diff, t_diff


def _check_t(n, m):
    if int(n) != n or n < 1:
        raise DomainError("n must be a positive integer")
    m = float(m)
    if not m > 2.0:
        raise DomainError("covariance (and the divergence) needs m > 2", threshold=2.0)
    return int(n), m


def _forward_t(n, m):
    x, a = 0.5 * m, 0.5 * n
    if x >= _STIRLING_MIN:
        # the log and 1/x terms cancel in closed form; what remains is O(n^2/m^2)
        s_diff, t_diff = _stirling_tail_diffs(x, a)
        return (-a * _log1p_minus(-1.0 / x) - 0.5 * _log1p_minus(a / x)
                + s_diff + (x + a) * t_diff)
    return (0.5 * n * math.log(2.0 * math.e / (m - 2.0)) + _lg(0.5 * (n + m))
            - _lg(0.5 * m) + 0.5 * (m + n) * (_psi(0.5 * m) - _psi(0.5 * (n + m))))


def kl_studentt_gaussian(n: int, m: float) -> KLReport:
    """D_kl(Student-t(n, m) || Gaussian of equal covariance), m > 2."""
    n, m = _check_t(n, m)
    if m <= _SMALL_M:
        asym = 0.5 * n * (math.log(2.0 / (m - 2.0)) + _psi(0.5 * m))
    else:
        asym = (0.5 * n * math.log(m / (m - 2.0)) + 0.5 * math.log(m / (n + m))
                - n / (2.0 * m) - n * (n + 2.0 * m) / (6.0 * m * m * (n + m)))
    return KLReport(forward=_forward_t(n, m), asymptotic=asym, n=n)


def j_integral(n: int, m: float, rel_tol: float = 1e-12) -> float:
    """Normalised integral of r^(n-1) ln(1+r^2) exp(-(m-2) r^2 / 2)."""
    n, m = _check_t(n, m)
    c = 0.5 * (m - 2.0)
    log_norm = (0.5 * n - 1.0) * LN2 - 0.5 * n * math.log(m - 2.0) + _lg(0.5 * n)

    def f_log(r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            return (n - 1.0) * np.log(r) + np.log(np.log1p(r * r)) - c * r * r - log_norm
    res = quad.integrate_log(f_log, quad.ExponentialTail(0.0, n + 1.0), rel_tol)
    if not res.converged:
        raise NonConvergenceError("J(n) quadrature did not converge")
    return res.value


def j_bounds(n: int, m: float):
    """(lower, upper) bounds on J(n)."""
    n, m = _check_t(n, m)
    ratio = math.exp(2.0 * (_lg(0.5 * n) - _lg(0.5 * (n + 1))))
    lower = (_psi(0.5 * n) - math.log(0.5 * (m - 2.0))
             + math.log1p(0.5 * (m - 2.0) * ratio))
    upper = math.log1p(n / m) + 2.0 * n / ((n + m) * (m - 2.0))
    return lower, upper


def kl_gaussian_studentt(n: int, m: float) -> KLReport:
    """D_kl(Gaussian || Student-t(n, m)) with J(n) and its bounds, m > 2."""
    n, m = _check_t(n, m)
    j = j_integral(n, m)
    lower, upper = j_bounds(n, m)
    reverse = (-0.5 * n * math.log(2.0 * math.e / (m - 2.0)) - _lg(0.5 * (n + m))
               + _lg(0.5 * m) + 0.5 * (m + n) * j)
    return KLReport(reverse=max(reverse, 0.0), j_integral=j, j_lower=lower,
                    j_upper=upper, n=n)


def kl_studentr_gaussian(n: int, m: float) -> KLReport:
    """D_kl(Student-r(n, m) || Gaussian of equal covariance), m > n - 2."""
    if int(n) != n or n < 1:
        raise DomainError("n must be a positive integer")
    n, m = int(n), float(m)
    if not m > n - 2:
        raise DomainError("Student-r needs m > n - 2", threshold=n - 2.0)
    h = 0.5 * (m - n) + 1.0
    y, a = 0.5 * m + 1.0, 0.5 * n
    if h >= _STIRLING_MIN:
        s_diff, t_diff = _stirling_tail_diffs(y, -a)
        forward = (-0.5 * _log1p_minus(-a / y) + a / (2.0 * y * h)
                   - s_diff - (h - 1.0) * t_diff)
    else:
        forward = (0.5 * n * math.log(2.0 * math.e / (m + 2.0)) + _lg(0.5 * m + 1.0)
                   - _lg(h) + 0.5 * (m - n) * (_psi(h) - _psi(0.5 * m + 1.0)))
    # Stirling expansion to first order; the second term carries a factor 1/2
    asym = (0.5 * math.log((m + 2.0) / (m - n + 2.0))
            - n * (m - n) / (2.0 * (m + 2.0) * (m - n + 2.0)))
    return KLReport(forward=forward, asymptotic=asym, n=n)
