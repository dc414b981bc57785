"""Pure-Python kernels, used when the compiled extension is unavailable.

Same algorithms and the same NaN-on-failure convention as ``_ckernels``.
"""

import math

import numpy as np

from ueplab import _tables

PI = math.pi
EPS = 2.220446049250313e-16
FPMIN = 2.2250738585072014e-308 / EPS
BIG = 1e250
LOG_BIG = math.log(BIG)
HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
EULER = _tables.EULER_GAMMA
MAXIT = 1000000
SPLITTER = 134217729.0
SQRT_HALF = 0.7071067811865476
LN2_HI = 6.93147180369123816490e-01
LN2_LO = 1.90821492927058770002e-10
NAN = math.nan
INF = math.inf

_ZETA = _tables.ZETA
_RGAM1P = _tables.RGAM1P
_PSI_TAYLOR = _tables.PSI_ROOT_TAYLOR
_STIRLING = _tables.STIRLING
_PSI_ASYM = _tables.PSI_ASYMPTOTIC


def _lgamma1p(e):
    res = -EULER * e
    pk = e * e
    for k in range(2, 64):
        term = _ZETA[k - 2] / k * pk
        if k % 2 == 1:
            term = -term
        res += term
        if abs(term) <= 1e-17 * abs(res):
            break
        pk *= e
    return res


def scalar_log_gamma(x):
    if math.isnan(x) or x <= 0.0:
        return NAN
    if x == INF:
        return INF
    if x < 0.5:
        return _lgamma1p(x) - math.log(x)
    if x <= 1.5:
        return _lgamma1p(x - 1.0)
    if x <= 2.5:
        return math.log1p(x - 2.0) + _lgamma1p(x - 2.0)
    if x < 12.0:
        y = x
        prod = 1.0
        while y > 2.5:
            y -= 1.0
            prod *= y
        return math.log(prod) + math.log1p(y - 2.0) + _lgamma1p(y - 2.0)
    z = 1.0 / x
    z2 = z * z
    s = 0.0
    for c in reversed(_STIRLING):
        s = s * z2 + c
    return _stirling_head(x, HALF_LOG_2PI + s * z)


def _two_prod(a, b):
    # Dekker: a * b = p + err exactly
    p = a * b
    c = SPLITTER * a
    ah = c - (c - a)
    al = a - ah
    c = SPLITTER * b
    bh = c - (c - b)
    bl = b - bh
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _stirling_head(x, tail):
    # (x - 1/2) ln x - x + tail, carrying the large terms in double-double
    if x > 1e280:
        # the splitting constant would overflow; plain evaluation suffices
        return (x - 0.5) * math.log(x) - x + tail
    f, k = math.frexp(x)
    if f < SQRT_HALF:
        f *= 2.0
        k -= 1
    # ln x = k ln2_hi (exact) + small part
    a = k * LN2_HI
    b = k * LN2_LO + math.log1p(f - 1.0)
    p1, e1 = _two_prod(x - 0.5, a)
    t = p1 - x
    bb = t - p1
    et = (p1 - (t - bb)) + (-x - bb)
    return t + (et + e1 + (x - 0.5) * b + tail)


def scalar_digamma(x):
    if math.isnan(x) or x <= 0.0:
        return NAN
    if x == INF:
        return INF
    d = (x - _tables.PSI_ROOT_HI) - _tables.PSI_ROOT_LO
    if abs(d) < 0.5:
        res = 0.0
        for c in reversed(_PSI_TAYLOR):
            res = res * d + c
        return res * d
    res = 0.0
    while x < 10.0:
        res -= 1.0 / x
        x += 1.0
    z2 = 1.0 / (x * x)
    s = 0.0
    for c in reversed(_PSI_ASYM):
        s = s * z2 + c
    return res + math.log(x) - 0.5 / x - s * z2


def _gamma_aux(mu):
    mu2 = mu * mu
    even = 0.0
    for k in range(26, -1, -2):
        even = even * mu2 + _RGAM1P[k]
    odd_over_mu = 0.0
    for k in range(25, 0, -2):
        odd_over_mu = odd_over_mu * mu2 + _RGAM1P[k]
    return (-odd_over_mu, even, even + mu * odd_over_mu,
            even - mu * odd_over_mu)


def _hankel_j(nu, x):
    mu = 4.0 * nu * nu
    p, q, t = 1.0, 0.0, 1.0
    prev = maxterm = 1.0
    converged = False
    for k in range(1, 200):
        odd = 2.0 * k - 1.0
        t *= (mu - odd * odd) / (8.0 * k * x)
        positive = (k // 2) % 2 == 0
        if k % 2 == 1:
            q = q + t if positive else q - t
        else:
            p = p + t if positive else p - t
        at = abs(t)
        maxterm = max(maxterm, at)
        if at < 1e-17:
            converged = True
            break
        if at > prev and prev < 1.0:
            return None
        prev = at
    if not converged or maxterm > 10.0:
        return None
    c = (0.5 * nu + 0.25) * PI
    cw = math.cos(x) * math.cos(c) + math.sin(x) * math.sin(c)
    sw = math.sin(x) * math.cos(c) - math.cos(x) * math.sin(c)
    val = p * cw - q * sw
    if val == 0.0:
        return -INF, 0.0
    return (0.5 * math.log(2.0 / (PI * x)) + math.log(abs(val)),
            1.0 if val > 0.0 else -1.0)


def _temme_j(nu, x):
    if x < 2.0:
        nl = int(nu + 0.5)
    else:
        nl = max(0, int(nu - x + 1.5))
    xmu = nu - nl
    xmu2 = xmu * xmu
    xi = 1.0 / x
    xi2 = 2.0 * xi
    w = xi2 / PI

    isign = 1
    h = max(nu * xi, FPMIN)
    b = xi2 * nu
    d = 0.0
    c = h
    for _ in range(MAXIT):
        b += xi2
        d = b - d
        if abs(d) < FPMIN:
            d = FPMIN
        c = b - 1.0 / c
        if abs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        dl = c * d
        h *= dl
        if d < 0.0:
            isign = -isign
        if abs(dl - 1.0) <= EPS:
            break
    else:
        return None

    rjl = isign * FPMIN
    rjpl = h * rjl
    rjl1 = rjl
    fact = nu * xi
    acc = 0.0
    for _ in range(nl):
        rjtemp = fact * rjl + rjpl
        fact -= xi
        rjpl = fact * rjtemp - rjl
        rjl = rjtemp
        if abs(rjl) > BIG:
            rjl /= BIG
            rjpl /= BIG
            acc += LOG_BIG
    if rjl == 0.0:
        rjl = EPS
    f = rjpl / rjl

    if x < 2.0:
        x2 = 0.5 * x
        pimu = PI * xmu
        fact = 1.0 if abs(pimu) < EPS else pimu / math.sin(pimu)
        d = -math.log(x2)
        e = xmu * d
        fact2 = 1.0 if abs(e) < EPS else math.sinh(e) / e
        gam1, gam2, gampl, gammi = _gamma_aux(xmu)
        ff = 2.0 / PI * fact * (gam1 * math.cosh(e) + gam2 * fact2 * d)
        e = math.exp(e)
        p = e / (gampl * PI)
        q = 1.0 / (e * PI * gammi)
        pimu2 = 0.5 * pimu
        fact3 = 1.0 if abs(pimu2) < EPS else math.sin(pimu2) / pimu2
        r = PI * pimu2 * fact3 * fact3
        c = 1.0
        d = -x2 * x2
        sm = ff + r * q
        sm1 = p
        for i in range(1, MAXIT):
            ff = (i * ff + p + q) / (i * i - xmu2)
            c *= d / i
            p /= i - xmu
            q /= i + xmu
            dl = c * (ff + r * q)
            sm += dl
            sm1 += c * p - i * dl
            if abs(dl) < (1.0 + abs(sm)) * EPS:
                break
        else:
            return None
        rymu = -sm
        ry1 = -sm1 * xi2
        rymup = xmu * xi * rymu - ry1
        rjmu = w / (rymup - f * rymu)
    else:
        a = 0.25 - xmu2
        p = -0.5 * xi
        q = 1.0
        br = 2.0 * x
        bi = 2.0
        fact = a * xi / (p * p + q * q)
        cr = br + q * fact
        ci = bi + p * fact
        den = br * br + bi * bi
        dr = br / den
        di = -bi / den
        dlr = cr * dr - ci * di
        dli = cr * di + ci * dr
        p, q = p * dlr - q * dli, p * dli + q * dlr
        for i in range(1, MAXIT):
            a += 2 * i
            bi += 2.0
            dr = a * dr + br
            di = a * di + bi
            if abs(dr) + abs(di) < FPMIN:
                dr = FPMIN
            fact = a / (cr * cr + ci * ci)
            cr = br + cr * fact
            ci = bi - ci * fact
            if abs(cr) + abs(ci) < FPMIN:
                cr = FPMIN
            den = dr * dr + di * di
            dr /= den
            di /= -den
            dlr = cr * dr - ci * di
            dli = cr * di + ci * dr
            p, q = p * dlr - q * dli, p * dli + q * dlr
            if abs(dlr - 1.0) + abs(dli) <= EPS:
                break
        else:
            return None
        gam = (p - f) / q
        rjmu = math.sqrt(w / ((p - f) * gam + q))
        if rjl < 0.0:
            rjmu = -rjmu

    if rjmu == 0.0:
        return -INF, 0.0
    logabs = (math.log(abs(rjl1)) + math.log(abs(rjmu)) - math.log(abs(rjl))
              - acc)
    sgn = 1.0
    for v in (rjl1, rjmu, rjl):
        if v < 0.0:
            sgn = -sgn
    return logabs, sgn


def _series_j(nu, x):
    y = -0.25 * x * x
    term = total = 1.0
    for k in range(1, 200):
        term *= y / (k * (nu + k))
        total += term
        if abs(term) <= EPS * total:
            break
    # log(x) - ln 2 rather than log(x / 2): halving a subnormal x underflows
    power = nu * (math.log(x) - LN2_HI - LN2_LO) if nu != 0.0 else 0.0
    return power - scalar_log_gamma(nu + 1.0) + math.log(total), 1.0


def scalar_log_bessel_j(nu, x):
    if math.isnan(nu) or math.isnan(x) or nu < 0.0 or x < 0.0:
        return NAN, NAN
    if x == 0.0:
        return (0.0, 1.0) if nu == 0.0 else (-INF, 0.0)
    if x == INF:
        return -INF, 0.0
    if x * x <= nu + 1.0:
        return _series_j(nu, x)
    if x >= 25.0 and x >= nu:
        res = _hankel_j(nu, x)
        if res is not None:
            return res
    res = _temme_j(nu, x)
    return (NAN, NAN) if res is None else res


def scalar_bessel_j(nu, x):
    la, s = scalar_log_bessel_j(nu, x)
    if math.isnan(la):
        return NAN
    if s == 0.0:
        return 0.0
    return s * math.exp(la)


def bessel_j_root(nu, a, b):
    fa = scalar_bessel_j(nu, a)
    fb = scalar_bessel_j(nu, b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if math.isnan(fa) or math.isnan(fb) or (fa > 0.0) == (fb > 0.0):
        return NAN
    width = b - a
    for _ in range(300):
        x = b - fb * (b - a) / (fb - fa)
        if not (a < x < b) or (b - a) > 0.5 * width:
            x = 0.5 * (a + b)
        width = b - a
        fx = scalar_bessel_j(nu, x)
        if fx == 0.0:
            return x
        if (fx > 0.0) == (fa > 0.0):
            a, fa = x, fx
        else:
            b, fb = x, fx
        if b - a <= 4.0 * EPS * abs(b):
            break
    return a if abs(fa) < abs(fb) else b


def scalar_log_bessel_k_scaled(nu, x):
    if math.isnan(nu) or math.isnan(x) or x < 0.0:
        return NAN
    if x == 0.0:
        return INF
    if x == INF:
        return -INF
    nu = abs(nu)
    nl = int(nu + 0.5)
    xmu = nu - nl
    xmu2 = xmu * xmu
    xi = 1.0 / x
    xi2 = 2.0 * xi
    if x < 2.0:
        scaled = False
        x2 = 0.5 * x
        pimu = PI * xmu
        fact = 1.0 if abs(pimu) < EPS else pimu / math.sin(pimu)
        d = -math.log(x2)
        e = xmu * d
        fact2 = 1.0 if abs(e) < EPS else math.sinh(e) / e
        gam1, gam2, gampl, gammi = _gamma_aux(xmu)
        ff = fact * (gam1 * math.cosh(e) + gam2 * fact2 * d)
        sm = ff
        e = math.exp(e)
        p = 0.5 * e / gampl
        q = 0.5 / (e * gammi)
        c = 1.0
        d = x2 * x2
        sm1 = p
        for i in range(1, MAXIT):
            ff = (i * ff + p + q) / (i * i - xmu2)
            c *= d / i
            p /= i - xmu
            q /= i + xmu
            dl = c * ff
            sm += dl
            sm1 += c * (p - i * ff)
            if abs(dl) < abs(sm) * EPS:
                break
        else:
            return NAN
        logk = math.log(sm)
        ratio = sm1 / sm * xi2
    else:
        scaled = True
        b = 2.0 * (1.0 + x)
        d = 1.0 / b
        h = delh = d
        q1, q2 = 0.0, 1.0
        a1 = 0.25 - xmu2
        q = c = a1
        a = -a1
        s = 1.0 + q * delh
        for i in range(1, MAXIT):
            a -= 2 * i
            c = -a * c / (i + 1.0)
            qnew = (q1 - b * q2) / a
            q1, q2 = q2, qnew
            q += c * qnew
            b += 2.0
            d = 1.0 / (b + a * d)
            delh = (b * d - 1.0) * delh
            h += delh
            dels = q * delh
            s += dels
            if abs(dels / s) <= EPS:
                break
        else:
            return NAN
        h = a1 * h
        logk = 0.5 * math.log(PI / (2.0 * x)) - math.log(s)
        ratio = (xmu + x + 0.5 - h) * xi
    prod = 1.0
    for i in range(1, nl + 1):
        if ratio > 1e100:
            logk += math.log(ratio)
        else:
            prod *= ratio
            if prod > 1e200:
                logk += math.log(prod)
                prod = 1.0
        ratio = (xmu + i) * xi2 + 1.0 / ratio
    logk += math.log(prod)
    return logk if scaled else logk + x


def log_gamma(x):
    return np.array([scalar_log_gamma(v) for v in x], dtype=float)


def digamma(x):
    return np.array([scalar_digamma(v) for v in x], dtype=float)


def log_abs_bessel_j(nu, x):
    pairs = [scalar_log_bessel_j(nu, v) for v in x]
    if not pairs:
        return np.empty(0), np.empty(0)
    la, sg = zip(*pairs)
    return np.array(la, dtype=float), np.array(sg, dtype=float)


def bessel_j(nu, x):
    return np.array([scalar_bessel_j(nu, v) for v in x], dtype=float)


def log_bessel_k_scaled(nu, x):
    return np.array([scalar_log_bessel_k_scaled(nu, v) for v in x],
                    dtype=float)
