"""Adaptive quadrature carried out in the log domain.

Integrands are supplied as ``f_log(x) -> ln|f(x)|`` (vectorised over numpy
arrays) plus an optional ``sign(x)`` callable, so values far outside the
double range can be integrated as long as their logarithms are finite.
Every Gauss-Kronrod panel is shifted by its own maximum before
exponentiation; panels are combined with log-sum-exp.

Semi-infinite ranges and endpoint singularities are mapped to the real line
with ``x = a + exp(t)``. Power-law behaviour at either end then becomes
exponential decay in ``t``, which is cut once it is 46 e-folds below the
peak and closed with an analytic remainder.
"""

import heapq
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from ueplab import specfun
from ueplab.errors import DomainError, NonConvergenceError

__all__ = [
    "LogQuadResult", "Finite", "ExponentialTail", "PowerTail",
    "OscillatoryPowerTail", "integrate_log", "integrate_oscillatory",
    "oscillatory_tail", "richardson", "wynn_epsilon", "log_sum_exp",
    "DEFAULT_REL_TOL", "OSCILLATORY_REL_TOL",
]

DEFAULT_REL_TOL = 1e-10
OSCILLATORY_REL_TOL = 1e-10

# Gauss-Kronrod 10/21 abscissae and weights on [-1, 1] (QUADPACK qk21).
_XK = np.array([
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0,
])
_WK = np.array([
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077208188184500, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
_WG = np.array([
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])
# Full symmetric node set: 10 negative nodes, the centre, 10 positive nodes.
_NODES = np.concatenate([-_XK[:-1], [0.0], _XK[:-1][::-1]])
_KW = np.concatenate([_WK[:-1], [_WK[-1]], _WK[:-1][::-1]])
_GW = np.zeros(21)
_GW[1:10:2] = _WG
_GW[11:20:2] = _WG[::-1]

_EPS = np.finfo(float).eps
_CUT = 46.0            # e-folds below the peak at which mapped tails are cut
_SCAN_STEP = 0.5
_SCAN_LIMIT = 700.0    # |t| bound; exp(700) is still a finite double
# finest relative tolerance worth refining for; each panel carries a 50 eps floor
_ATTAINABLE_TOL = 512 * _EPS


@dataclass(frozen=True)
class LogQuadResult:
    """Integral stored as sign * exp(log_abs_value).

    ``log_abs_error`` is the log of the absolute error estimate; the
    relative error is ``exp(log_abs_error - log_abs_value)``.
    """

    log_abs_value: float
    sign: float
    log_abs_error: float
    evaluations: int
    converged: bool

    @property
    def abs_error_estimate(self):
        return math.exp(self.log_abs_error) if self.log_abs_error < 709 else math.inf

    @property
    def rel_error(self):
        if self.sign == 0:
            return 0.0 if self.log_abs_error == -math.inf else math.inf
        return math.exp(min(self.log_abs_error - self.log_abs_value, 700.0))

    @property
    def value(self):
        if self.sign == 0:
            return 0.0
        if self.log_abs_value > 709.7:
            return self.sign * math.inf
        return self.sign * math.exp(self.log_abs_value)


@dataclass(frozen=True)
class Finite:
    """Bounded interval [a, b].

    ``left_exponent``/``right_exponent`` declare integrand behaviour
    ``|x - a|^s`` (resp. ``|b - x|^s``) near an endpoint; a non-integer
    exponent below one triggers an exponential endpoint map.

    Close to a nonzero endpoint the integrand only sees x to within
    eps |endpoint|, so strong singularities there limit the attainable
    accuracy (the error estimate includes this). Writing the integrand in
    the distance to the endpoint on [0, b - a] avoids the limit.
    """

    a: float
    b: float
    left_exponent: Optional[float] = None
    right_exponent: Optional[float] = None


@dataclass(frozen=True)
class ExponentialTail:
    """[a, inf) with integrand decaying faster than any power."""

    a: float = 0.0
    left_exponent: Optional[float] = None


@dataclass(frozen=True)
class PowerTail:
    """[a, inf) with integrand ~ x^exponent at infinity (exponent < -1)."""

    a: float = 0.0
    exponent: float = -2.0
    left_exponent: Optional[float] = None


@dataclass(frozen=True)
class OscillatoryPowerTail:
    """[a, inf) with integrand x^envelope_exponent |J_order(x)|^power w(x).

    ``weight`` picks w: ``None`` for 1, ``"log_r"`` for ln x and
    ``"log_power"`` for ln(|J_order(x)|^power).
    """

    a: float = 0.0
    order: float = 0.0
    power: float = 2.0
    envelope_exponent: float = 0.0
    weight: Optional[str] = None


def log_sum_exp(logs, signs=None):
    """Return (ln|sum|, sign) of sum_i signs_i * exp(logs_i)."""
    logs = np.asarray(logs, dtype=float)
    if signs is None:
        signs = np.ones_like(logs)
    signs = np.asarray(signs, dtype=float)
    live = (signs != 0) & (logs > -np.inf)
    if not live.any():
        return -math.inf, 0.0
    m = float(np.max(logs[live]))
    if m == math.inf:
        return math.inf, float(signs[live][np.argmax(logs[live])])
    total = float(np.sum(signs[live] * np.exp(logs[live] - m)))
    if total == 0.0:
        return -math.inf, 0.0
    return m + math.log(abs(total)), math.copysign(1.0, total)


# ---------------------------------------------------------------- core

class _Adaptive:
    """Globally adaptive G10K21 over a set of intervals of a mapped variable.

    ``g_log``/``g_sign`` give the mapped integrand (Jacobian included).
    Extra terms (analytic remainders) are folded into the convergence test.
    """

    def __init__(self, g_log, g_sign, limit, noise=None):
        self.g_log = g_log
        self.g_sign = g_sign
        self.limit = limit
        # noise(lo, hi): relative rounding noise of the integrand on a panel
        self.noise = noise
        self.evaluations = 0
        self.lo = []
        self.hi = []
        self.shift = []
        self.kron = []
        self.err = []
        self.alive = []
        self.heap = []

    def _panel(self, lo, hi):
        half = 0.5 * (hi - lo)
        centre = 0.5 * (hi + lo)
        x = centre + half * _NODES
        v = np.asarray(self.g_log(x), dtype=float)
        self.evaluations += 21
        if np.isnan(v).any():
            raise NonConvergenceError(
                f"integrand returned NaN near {x[np.isnan(v)][0]!r}")
        m = float(np.max(v))
        if m == -math.inf:
            return -math.inf, 0.0, 0.0, False
        if m == math.inf:
            raise NonConvergenceError(
                f"integrand is infinite near {x[np.argmax(v)]!r}")
        e = np.exp(v - m)
        if self.g_sign is not None:
            e = e * np.asarray(self.g_sign(x), dtype=float)
        kron = half * float(np.dot(_KW, e))
        gauss = half * float(np.dot(_GW, e))
        resabs = abs(half) * float(np.dot(_KW, np.abs(e)))
        mean = kron / (2.0 * half)
        resasc = abs(half) * float(np.dot(_KW, np.abs(e - mean)))
        err = abs(kron - gauss)
        if resasc != 0.0 and err != 0.0:
            err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
        err = max(err, 50.0 * _EPS * resabs)
        noisy = False
        if self.noise is not None:
            floor = self.noise(lo, hi) * resabs
            noisy = floor >= err
            err = max(err, floor)
        return m, kron, err, noisy

    def add(self, lo, hi):
        m, k, e, noisy = self._panel(lo, hi)
        idx = len(self.lo)
        self.lo.append(lo)
        self.hi.append(hi)
        self.shift.append(m)
        self.kron.append(k)
        self.err.append(e)
        # bisecting cannot reduce rounding noise, so noisy panels stay put
        width_ok = (abs(hi - lo) > 64.0 * _EPS * max(abs(lo), abs(hi), 1e-300)
                    and not noisy)
        self.alive.append(width_ok)
        if e > 0.0 and width_ok:
            heapq.heappush(self.heap, (-(m + math.log(e)), idx))

    def _refinable_error(self, m):
        live = [e * math.exp(sh - m) for e, sh, ok in
                zip(self.err, self.shift, self.alive) if ok and sh > -math.inf]
        return sum(live)

    def totals(self, extras=()):
        shift = np.array(self.shift + [t[0] for t in extras])
        kron = np.array(self.kron + [t[1] for t in extras])
        err = np.array(self.err + [t[2] for t in extras])
        finite = shift > -np.inf
        if not finite.any():
            return -math.inf, 0.0, -math.inf
        m = float(np.max(shift[finite]))
        scale = np.zeros(shift.shape)
        scale[finite] = np.exp(shift[finite] - m)
        total = float(np.dot(scale, kron))
        error = float(np.dot(scale, err))
        return m, total, error

    def run(self, rel_tol, extras=(), log_abs_tol=-math.inf):
        while True:
            m, total, error = self.totals(extras)
            if m == -math.inf:
                return m, total, error, True
            tol = max(rel_tol * abs(total), math.exp(min(log_abs_tol - m, 700.0)))
            if error <= tol:
                return m, total, error, True
            if not self.heap or len(self.lo) >= self.limit:
                return m, total, error, False
            if self.noise is not None and self._refinable_error(m) <= 0.1 * tol:
                # what is left is rounding noise that refinement cannot remove
                return m, total, error, False
            # refine a batch of the worst panels before re-testing
            for _ in range(min(8, len(self.heap))):
                _, idx = heapq.heappop(self.heap)
                if not self.alive[idx]:
                    continue
                self.alive[idx] = False
                lo, hi = self.lo[idx], self.hi[idx]
                mid = 0.5 * (lo + hi)
                self.shift[idx] = -math.inf
                self.kron[idx] = 0.0
                self.err[idx] = 0.0
                self.add(lo, mid)
                self.add(mid, hi)


def _result(m, total, error, evaluations, converged):
    if total == 0.0:
        log_v, sign = -math.inf, 0.0
    else:
        log_v, sign = m + math.log(abs(total)), math.copysign(1.0, total)
    log_e = m + math.log(error) if error > 0.0 else -math.inf
    return LogQuadResult(log_v, sign, log_e, evaluations, converged)


def _needs_map(s):
    return s is not None and s < 1.0 and float(s) != math.floor(s)


def _scan_line(g_log, t_start, t_stop, step=_SCAN_STEP):
    t = np.arange(t_start, t_stop + 0.5 * step, step)
    return t, np.asarray(g_log(t), dtype=float)


def _remainder(g0, rate, d1, d2, h1, h2, rel_unc):
    """ln of the integral of exp(g) beyond an edge where g has value g0 and
    decays at ``rate``, with the relative uncertainty of that value.

    d1, d2 are the excess slopes on the two steps inward. When they grow
    like e^x with the distance x from the edge, the integrand carries a
    factor 1 + u e^x and the remainder is corrected to first order in u.
    """
    if d1 == 0.0 or not rate > 0.0:
        return None, rel_unc
    u1 = d1 * h1 / math.expm1(h1)
    u2 = d2 * h2 / (math.exp(h1) * math.expm1(h2))
    if not (abs(u1 - u2) <= 0.25 * abs(u1) and abs(u1) < 0.1):
        return None, rel_unc
    factor = (1.0 / rate + u1 / (rate + 1.0)) / (1.0 + u1)
    return g0 + math.log(factor), max(abs(u1 - u2) + u1 * u1, 1e-14)


def _tline(g_log, g_sign, t_min, t_max, left_rate, right_rate, rel_tol,
           limit, log_abs_tol, floor=-_SCAN_LIMIT, snap=None, noise=None):
    """Integrate exp(g_log(t)) over (t_min, t_max), either end possibly
    infinite, where g decays linearly at the infinite ends.

    ``floor`` stops the scan of an open left end early; everything below
    it is covered by the analytic remainder. ``snap(t)`` moves the left
    edge to a nearby t whose physical point is exactly representable.
    """
    lo = max(t_min, -40.0, floor)
    hi = min(t_max, 40.0)
    t, v = _scan_line(g_log, lo, hi)
    evaluations = len(t)
    # widen until the scan has left the bulk on both infinite sides
    while True:
        finite = v[np.isfinite(v)]
        peak = float(np.max(finite)) if finite.size else -math.inf
        grow = False
        if t_min == -math.inf and lo > floor and v[0] > peak - _CUT:
            lo2 = max(lo - 80.0, floor)
            t2, v2 = _scan_line(g_log, lo2, lo - _SCAN_STEP)
            t, v, lo = np.concatenate([t2, t]), np.concatenate([v2, v]), lo2
            evaluations += len(t2)
            grow = True
        if t_max == math.inf and hi < _SCAN_LIMIT and v[-1] > peak - _CUT:
            hi2 = min(hi + 80.0, _SCAN_LIMIT)
            t2, v2 = _scan_line(g_log, hi + _SCAN_STEP, hi2)
            t, v, hi = np.concatenate([t, t2]), np.concatenate([v, v2]), hi2
            evaluations += len(t2)
            grow = True
        if not grow:
            break
    if np.isnan(v).any():
        raise NonConvergenceError("integrand returned NaN during scan")
    if peak == -math.inf:
        return LogQuadResult(-math.inf, 0.0, -math.inf, evaluations, True)
    if peak == math.inf:
        raise NonConvergenceError("integrand is infinite on the scan grid")

    above = np.nonzero(v > peak - _CUT)[0]
    i_lo = max(above[0] - 1, 0)
    i_hi = min(above[-1] + 1, len(t) - 1)
    a = t_min if (t_min != -math.inf and i_lo == 0) else float(t[i_lo])
    if snap is not None and t_min == -math.inf:
        a = snap(a)
    b = t_max if (t_max != math.inf and i_hi == len(t) - 1) else float(t[i_hi])

    # analytic remainders beyond each open end, exp(g(edge)) / rate to
    # leading order
    extras = []
    tails_ok = True
    for open_end, edge, step, rate_hint in (
            (t_min == -math.inf, a, _SCAN_STEP, left_rate),
            (t_max == math.inf, b, -_SCAN_STEP, right_rate)):
        if not open_end:
            continue
        pts = [edge, edge + step, edge + 2.0 * step]
        if snap is not None and step > 0:
            pts[1:] = [snap(p) for p in pts[1:]]
        g0, g1, g2 = (float(u) for u in g_log(np.array(pts)))
        evaluations += 3
        if g0 == -math.inf:
            continue
        h1, h2 = abs(pts[1] - pts[0]), abs(pts[2] - pts[1])
        slope = (g1 - g0) / h1
        log_rem = None
        if rate_hint is not None:
            rate = rate_hint
            rel_unc = max(abs(slope - rate) / rate, 1e-14)
            log_rem, rel_unc = _remainder(g0, rate, slope - rate,
                                          (g2 - g1) / h2 - rate, h1, h2, rel_unc)
        else:
            rate, rel_unc = slope, 0.5
        if not rate > 0.0:
            tails_ok = False
            continue
        if log_rem is None:
            log_rem = g0 - math.log(rate)
        sgn = 1.0 if g_sign is None else float(g_sign(np.array([edge]))[0])
        extras.append((log_rem, sgn, rel_unc))

    engine = _Adaptive(g_log, g_sign, limit, noise)
    # initial panels roughly two units of t wide
    edges = np.linspace(a, b, max(1, int(math.ceil((b - a) / 2.0))) + 1)
    for lo_, hi_ in zip(edges[:-1], edges[1:]):
        engine.add(float(lo_), float(hi_))
    m, total, error, ok = engine.run(rel_tol, extras, log_abs_tol)
    return _result(m, total, error, engine.evaluations + evaluations,
                   ok and tails_ok)


def _plain(f_log, sign, a, b, rel_tol, limit, log_abs_tol, pieces=1):
    engine = _Adaptive(f_log, sign, limit)
    edges = np.linspace(a, b, pieces + 1)
    for lo, hi in zip(edges[:-1], edges[1:]):
        engine.add(float(lo), float(hi))
    m, total, error, ok = engine.run(rel_tol, (), log_abs_tol)
    return _result(m, total, error, engine.evaluations, ok)


def _combine(parts):
    logs = [p.log_abs_value for p in parts]
    signs = [p.sign for p in parts]
    log_v, sign = log_sum_exp(logs, signs)
    log_e, _ = log_sum_exp([p.log_abs_error for p in parts])
    return LogQuadResult(log_v, sign, log_e,
                         sum(p.evaluations for p in parts),
                         all(p.converged for p in parts))


def _map_floor(end, width):
    # Closer to a nonzero end, end +- width e^t carries rounding noise of
    # relative size eps |end| / offset. Stopping at offset sqrt(eps) |end|
    # balances that noise against the power-law remainder's model error.
    if end == 0.0:
        return -_SCAN_LIMIT
    return max(min(math.log(math.sqrt(_EPS) * abs(end) / width), -1.0), -_SCAN_LIMIT)


def _end_noise(end, width, s):
    # f(end +- width e^t) ~ offset^s; rounding end +- offset perturbs the
    # offset by eps |end|, a relative change |s| eps |end| / offset in f
    if end == 0.0:
        return None
    gain = max(abs(s), 1.0) * _EPS * abs(end) / width

    def noise(lo, hi):
        return gain * math.exp(-min(lo, hi))
    return noise


def _left_mapped(f_log, sign, a, b, s, rel_tol, limit, log_abs_tol):
    # x = a + (b - a) e^t, t in (-inf, 0]
    width = b - a
    log_w = math.log(width)

    def g_log(t):
        return np.asarray(f_log(a + width * np.exp(t)), dtype=float) + log_w + t

    g_sign = None if sign is None else (lambda t: sign(a + width * np.exp(t)))
    return _tline(g_log, g_sign, -math.inf, 0.0, s + 1.0, None, rel_tol,
                  limit, log_abs_tol, _map_floor(a, width),
                  lambda t: math.log(((a + width * math.exp(t)) - a) / width),
                  _end_noise(a, width, s))


def _right_mapped(f_log, sign, a, b, s, rel_tol, limit, log_abs_tol):
    width = b - a
    log_w = math.log(width)

    def g_log(t):
        return np.asarray(f_log(b - width * np.exp(t)), dtype=float) + log_w + t

    g_sign = None if sign is None else (lambda t: sign(b - width * np.exp(t)))
    return _tline(g_log, g_sign, -math.inf, 0.0, s + 1.0, None, rel_tol,
                  limit, log_abs_tol, _map_floor(b, width),
                  lambda t: math.log((b - (b - width * math.exp(t))) / width),
                  _end_noise(b, width, s))


def integrate_log(f_log: Callable, domain, rel_tol: float = DEFAULT_REL_TOL,
                  sign: Optional[Callable] = None, limit: int = 4000,
                  log_abs_tol: float = -math.inf) -> LogQuadResult:
    """Integrate sign(x) * exp(f_log(x)) over ``domain``.

    ``f_log`` and ``sign`` are called with 1-D float arrays. The result's
    error estimate is at most ``rel_tol`` times its value when
    ``converged`` is true, or below ``exp(log_abs_tol)``.
    """
    if not rel_tol > 0:
        raise DomainError("rel_tol must be positive")
    if rel_tol >= _ATTAINABLE_TOL:
        return _integrate_log(f_log, domain, rel_tol, sign, limit, log_abs_tol)
    # refine only as far as rounding allows, then judge against the request
    res = _integrate_log(f_log, domain, _ATTAINABLE_TOL, sign, limit, log_abs_tol)
    ok = res.converged and (res.log_abs_error <= math.log(rel_tol) + res.log_abs_value
                            or res.log_abs_error <= log_abs_tol)
    return replace(res, converged=ok)


def _integrate_log(f_log, domain, rel_tol, sign, limit, log_abs_tol):
    if isinstance(domain, Finite):
        a, b = float(domain.a), float(domain.b)
        if not a < b:
            if a == b:
                return LogQuadResult(-math.inf, 0.0, -math.inf, 0, True)
            raise DomainError("Finite domain needs a < b")
        for side, s in (("left", domain.left_exponent), ("right", domain.right_exponent)):
            if s is not None and s <= -1.0:
                raise DomainError(f"integrand not integrable at {side} endpoint")
        left = _needs_map(domain.left_exponent)
        right = _needs_map(domain.right_exponent)
        if not left and not right:
            return _plain(f_log, sign, a, b, rel_tol, limit, log_abs_tol)
        mid = 0.5 * (a + b)
        parts = []
        if left:
            parts.append(_left_mapped(f_log, sign, a, mid, domain.left_exponent,
                                      rel_tol, limit, log_abs_tol))
        else:
            parts.append(_plain(f_log, sign, a, mid, rel_tol, limit, log_abs_tol))
        if right:
            parts.append(_right_mapped(f_log, sign, mid, b, domain.right_exponent,
                                       rel_tol, limit, log_abs_tol))
        else:
            parts.append(_plain(f_log, sign, mid, b, rel_tol, limit, log_abs_tol))
        return _combine(parts)
    if isinstance(domain, (ExponentialTail, PowerTail)):
        a = float(domain.a)
        s = domain.left_exponent
        if s is not None and s <= -1.0:
            raise DomainError("integrand not integrable at left endpoint")
        right_rate = None
        if isinstance(domain, PowerTail):
            if not domain.exponent < -1.0:
                raise DomainError("power tail needs exponent < -1")
            right_rate = -(domain.exponent + 1.0)

        def g_log(t):
            return np.asarray(f_log(a + np.exp(t)), dtype=float) + t

        g_sign = None if sign is None else (lambda t: sign(a + np.exp(t)))
        left_rate = None if s is None else s + 1.0
        return _tline(g_log, g_sign, -math.inf, math.inf, left_rate,
                      right_rate, rel_tol, limit, log_abs_tol, _map_floor(a, 1.0),
                      lambda t: math.log((a + math.exp(t)) - a),
                      _end_noise(a, 1.0, 0.0 if s is None else s))
    if isinstance(domain, OscillatoryPowerTail):
        return _oscillatory(f_log, sign, domain, rel_tol)
    raise TypeError(f"unknown domain {domain!r}")


# ---------------------------------------------------------------- extrapolation

def richardson(radii, values, exponents, log_exponents=()):
    """Extrapolate values(R) = V + sum_i c_i R^e_i (+ d_j R^f_j ln R) to V.

    Uses the last ``len(exponents) + len(log_exponents) + 1`` points and
    solves the linear system exactly.
    """
    k = len(exponents) + len(log_exponents) + 1
    if len(values) < k:
        raise ValueError("not enough points")
    r = np.asarray(radii[-k:], dtype=float)
    y = np.asarray(values[-k:], dtype=float)
    # scale each basis column for conditioning
    cols = [np.ones(k)]
    for e in exponents:
        c = (r / r[-1]) ** e
        cols.append(c)
    for f in log_exponents:
        c = (r / r[-1]) ** f * np.log(r)
        cols.append(c / np.max(np.abs(c)))
    mat = np.column_stack(cols)
    return float(np.linalg.solve(mat, y)[0])


def wynn_epsilon(partial_sums):
    """Wynn's epsilon algorithm; returns (estimate, error estimate)."""
    s = [float(v) for v in partial_sums]
    n = len(s)
    if n < 3:
        return s[-1], abs(s[-1] - s[-2]) if n > 1 else math.inf
    prev = [0.0] * (n + 1)
    cur = s[:]
    best, best_err = s[-1], abs(s[-1] - s[-2])
    col = 0
    while len(cur) > 1:
        nxt = []
        for i in range(len(cur) - 1):
            diff = cur[i + 1] - cur[i]
            if diff == 0.0:
                nxt = None
                break
            nxt.append(prev[i + 1] + 1.0 / diff)
        if nxt is None:
            break
        col += 1
        if col % 2 == 0 and len(nxt) >= 2:
            err = abs(nxt[-1] - nxt[-2])
            if err < best_err:
                best, best_err = nxt[-1], err
        prev, cur = cur, nxt
    return best, best_err


# ---------------------------------------------------------------- oscillatory

def _cq(q):
    """Mean of |cos|^q over a period."""
    return math.exp(specfun.log_gamma(0.5 * (q + 1.0))
                    - specfun.log_gamma(0.5 * q + 1.0)) / math.sqrt(math.pi)


def oscillatory_tail(radius, alpha, q, weight=None):
    """Leading-order value of the integral from ``radius`` to infinity of
    r^alpha |J(r)|^q w(r), with J replaced by its phase-averaged envelope.

    Returned as (ln|value|, sign).
    """
    beta = alpha - 0.5 * q
    if not beta < -1.0:
        raise DomainError("oscillatory tail diverges (need alpha - q/2 < -1)")
    g = -(beta + 1.0)
    log_amp = math.log(_cq(q)) + 0.5 * q * math.log(2.0 / math.pi)
    lr = math.log(radius)
    base = log_amp + (beta + 1.0) * lr
    if weight is None:
        return base - math.log(g), 1.0
    # int_R^inf r^beta ln r dr = R^(beta+1) (ln R / g + 1 / g^2)
    with_log = lr / g + 1.0 / (g * g)
    if weight == "log_r":
        return base + math.log(abs(with_log)), math.copysign(1.0, with_log)
    if weight == "log_power":
        d_q = 0.5 * (specfun.digamma(0.5 * (q + 1.0)) - specfun.digamma(0.5 * q + 1.0))
        c0 = 0.5 * math.log(2.0 / math.pi) + d_q
        val = q * (c0 / g - 0.5 * with_log)
        return base + math.log(abs(val)), math.copysign(1.0, val)
    raise DomainError(f"unknown weight {weight!r}")


def _tail_bases(beta, weight):
    # leading terms of T(R) - T(inf) for tails closed at a zero of J
    if weight is None:
        return (beta - 1.0, beta - 2.0, beta - 3.0), ()
    return (beta - 1.0, beta - 2.0, beta - 3.0), (beta - 1.0, beta - 2.0)


def _oscillatory(f_log, sign, dom, rel_tol, max_arches=20000):
    nu = float(dom.order)
    q = float(dom.power)
    alpha = float(dom.envelope_exponent)
    weight = dom.weight
    beta = alpha - 0.5 * q
    if not beta < -1.0:
        raise DomainError(
            "integral diverges at infinity: need alpha - q/2 < -1",
            threshold=-1.0)
    a = float(dom.a)
    zeros_needed = 64
    zeros = specfun.bessel_j_zeros(nu, zeros_needed)
    k0 = int(np.searchsorted(zeros, a, side="right"))
    while k0 >= len(zeros):
        zeros_needed *= 2
        zeros = specfun.bessel_j_zeros(nu, zeros_needed)
    # stopping decisions use a tolerance doubles can reach; convergence is
    # still judged against rel_tol, so a finer request reports failure fast
    stop_tol = max(rel_tol, _ATTAINABLE_TOL)
    arch_tol = 0.1 * stop_tol

    def piece(lo, hi, left_exp, right_exp):
        parts = []
        cuts = [lo, hi]
        if weight == "log_r" and lo < 1.0 < hi:
            cuts = [lo, 1.0, hi]
        for i, (u, v) in enumerate(zip(cuts[:-1], cuts[1:])):
            le = left_exp if i == 0 else None
            re = right_exp if i == len(cuts) - 2 else None
            parts.append(integrate_log(f_log, Finite(u, v, le, re), arch_tol,
                                       sign=sign))
        return parts[0] if len(parts) == 1 else _combine(parts)

    left_exp = alpha + nu * q if a == 0.0 else None
    head = piece(a, float(zeros[k0]), left_exp, q)
    results = [head]
    ref = head.log_abs_value if head.sign != 0 else 0.0

    def lin(res):
        return res.sign * math.exp(res.log_abs_value - ref) if res.sign else 0.0

    total = lin(head)
    abs_err = math.exp(head.log_abs_error - ref) if head.log_abs_error > -math.inf else 0.0
    converged_parts = head.converged
    exps, log_exps = _tail_bases(beta, weight)
    need = len(exps) + len(log_exps) + 1
    start_r = max(3.0 * nu + 20.0, 10.0)
    radii, values, estimates = [], [], []
    next_check = None
    k = k0
    count = 0
    estimate, est_err = None, math.inf
    while count < max_arches:
        if k + 1 >= len(zeros):
            zeros_needed = max(zeros_needed * 2, k + 2)
            zeros = specfun.bessel_j_zeros(nu, zeros_needed)
        lo, hi = float(zeros[k]), float(zeros[k + 1])
        arch = piece(lo, hi, q, q)
        results.append(arch)
        total += lin(arch)
        if arch.log_abs_error > -math.inf:
            abs_err += math.exp(arch.log_abs_error - ref)
        converged_parts = converged_parts and arch.converged
        k += 1
        count += 1
        radius = hi
        if radius < start_r:
            continue
        if next_check is None:
            next_check = count
        if count < next_check:
            continue
        next_check = int(math.ceil(count * 1.5)) + 1
        log_tail, tail_sign = oscillatory_tail(radius, alpha, q, weight)
        tail = tail_sign * math.exp(log_tail - ref)
        radii.append(radius)
        values.append(total + tail)
        if abs(tail) <= 1e-3 * stop_tol * abs(total + tail):
            estimate, est_err = total + tail, abs(tail) * 1e-2
            break
        if len(values) >= need:
            estimates.append(richardson(radii, values, exps, log_exps))
            if len(estimates) >= 2:
                estimate = estimates[-1]
                est_err = abs(estimates[-1] - estimates[-2])
                if est_err <= 0.5 * stop_tol * abs(estimate):
                    break
    else:
        if estimate is None:
            estimate = values[-1] if values else total
            est_err = abs(estimate)
        converged_parts = False
    if estimate is None:
        estimate, est_err = total, abs(total)
        converged_parts = False
    err = est_err + abs_err
    evaluations = sum(r.evaluations for r in results)
    ok = converged_parts and err <= rel_tol * abs(estimate)
    if estimate == 0.0:
        return LogQuadResult(-math.inf, 0.0, ref + math.log(err) if err else -math.inf,
                             evaluations, ok)
    return LogQuadResult(ref + math.log(abs(estimate)), math.copysign(1.0, estimate),
                         ref + math.log(err) if err > 0 else -math.inf,
                         evaluations, ok)


def integrate_oscillatory(alpha, nu, q, rel_tol=OSCILLATORY_REL_TOL,
                          weight=None):
    """Integral over (0, inf) of r^alpha |J_nu(r)|^q w(r).

    w is 1 by default, ln r for ``weight="log_r"`` and ln(|J_nu(r)|^q) for
    ``weight="log_power"``. Requires alpha - q/2 < -1 (convergence at
    infinity) and alpha + nu q > -1 (convergence at the origin).
    """
    alpha, nu, q = float(alpha), float(nu), float(q)
    if not nu >= 0.0:
        raise DomainError("Bessel order must be >= 0")
    if not q > 0.0:
        raise DomainError("power q must be positive")
    if not alpha - 0.5 * q < -1.0:
        raise DomainError("integral diverges at infinity: need alpha - q/2 < -1",
                          threshold=-1.0)
    if not alpha + nu * q > -1.0:
        raise DomainError("integral diverges at the origin: need alpha + nu q > -1",
                          threshold=-1.0)

    def f_log(r):
        la, _ = specfun.log_abs_bessel_j(nu, r)
        with np.errstate(divide="ignore"):
            base = alpha * np.log(r) + q * la
            if weight is None:
                return base
            if weight == "log_r":
                return base + np.log(np.abs(np.log(r)))
            if weight == "log_power":
                return base + np.log(np.abs(q * la))
        raise DomainError(f"unknown weight {weight!r}")

    sign = None
    if weight == "log_r":
        def sign(r):
            return np.sign(np.log(r))
    elif weight == "log_power":
        def sign(r):
            la, _ = specfun.log_abs_bessel_j(nu, r)
            return np.sign(la)
    dom = OscillatoryPowerTail(0.0, nu, q, alpha, weight)
    return _oscillatory(f_log, sign, dom, rel_tol)
