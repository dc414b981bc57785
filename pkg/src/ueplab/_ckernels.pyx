# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled scalar kernels for the special functions.

The algorithms are the same as in ``_pykernels``; the two modules are kept
in step and the test suite cross-checks them point by point. Every kernel
returns NaN instead of raising so the array loops can run without the GIL;
``specfun`` turns NaN results into exceptions.
"""

import numpy as np

from libc.math cimport (
    INFINITY, NAN, cos, exp, fabs, frexp, isnan, log, log1p, sin, sinh, cosh, sqrt,
)

from ueplab import _tables

cdef double PI = 3.141592653589793
cdef double EPS = 2.220446049250313e-16
cdef double FPMIN = 2.2250738585072014e-308 / 2.220446049250313e-16
cdef double BIG = 1e250
cdef double LOG_BIG = 575.6462732485114
cdef double HALF_LOG_2PI = 0.9189385332046728
cdef double EULER = 0.5772156649015329
cdef int MAXIT = 1000000
cdef double SPLITTER = 134217729.0
cdef double SQRT_HALF = 0.7071067811865476
cdef double LN2_HI = 6.93147180369123816490e-01
cdef double LN2_LO = 1.90821492927058770002e-10

cdef double RGAM1P[27]
cdef double ZETA[62]
cdef double PSI_TAYLOR[45]
cdef double STIRLING[8]
cdef double PSI_ASYM[7]
cdef double PSI_ROOT_HI = _tables.PSI_ROOT_HI
cdef double PSI_ROOT_LO = _tables.PSI_ROOT_LO

RGAM1P[:] = _tables.RGAM1P
ZETA[:] = _tables.ZETA
PSI_TAYLOR[:] = _tables.PSI_ROOT_TAYLOR
STIRLING[:] = _tables.STIRLING
PSI_ASYM[:] = _tables.PSI_ASYMPTOTIC


# ---------------------------------------------------------------- gamma family

cdef double _lgamma1p(double e) nogil:
    # lgamma(1 + e) for |e| <= 1/2
    cdef double res = -EULER * e
    cdef double pk = e * e
    cdef double term
    cdef int k
    for k in range(2, 64):
        term = ZETA[k - 2] / k * pk
        if k % 2 == 1:
            term = -term
        res += term
        if fabs(term) <= 1e-17 * fabs(res):
            break
        pk *= e
    return res


cdef double c_log_gamma(double x) nogil:
    cdef double y, prod, z, z2, s
    cdef int k
    if isnan(x) or x <= 0.0:
        return NAN
    if x == INFINITY:
        return INFINITY
    if x < 0.5:
        return _lgamma1p(x) - log(x)
    if x <= 1.5:
        return _lgamma1p(x - 1.0)
    if x <= 2.5:
        return log1p(x - 2.0) + _lgamma1p(x - 2.0)
    if x < 12.0:
        y = x
        prod = 1.0
        while y > 2.5:
            y -= 1.0
            prod *= y
        return log(prod) + log1p(y - 2.0) + _lgamma1p(y - 2.0)
    z = 1.0 / x
    z2 = z * z
    s = 0.0
    for k in range(7, -1, -1):
        s = s * z2 + STIRLING[k]
    return _stirling_head(x, HALF_LOG_2PI + s * z)


cdef inline void _two_prod(double a, double b, double* p, double* err) nogil:
    # Dekker: a * b = p + err exactly, without fused multiply-add
    cdef double c, ah, al, bh, bl
    p[0] = a * b
    c = SPLITTER * a
    ah = c - (c - a)
    al = a - ah
    c = SPLITTER * b
    bh = c - (c - b)
    bl = b - bh
    err[0] = ((ah * bh - p[0]) + ah * bl + al * bh) + al * bl


cdef double _stirling_head(double x, double tail) nogil:
    # (x - 1/2) ln x - x + tail, carrying the large terms in double-double
    cdef int k
    cdef double f = frexp(x, &k)
    cdef double a, b, p1, e1, t, bb, et
    if x > 1e280:
        # the splitting constant would overflow; plain evaluation suffices
        return (x - 0.5) * log(x) - x + tail
    if f < SQRT_HALF:
        f *= 2.0
        k -= 1
    # ln x = k ln2_hi (exact) + small part
    a = k * LN2_HI
    b = k * LN2_LO + log1p(f - 1.0)
    _two_prod(x - 0.5, a, &p1, &e1)
    t = p1 - x
    bb = t - p1
    et = (p1 - (t - bb)) + (-x - bb)
    return t + (et + e1 + (x - 0.5) * b + tail)


cdef double c_digamma(double x) nogil:
    cdef double d, res, z2, s
    cdef int k
    if isnan(x) or x <= 0.0:
        return NAN
    if x == INFINITY:
        return INFINITY
    d = (x - PSI_ROOT_HI) - PSI_ROOT_LO
    if fabs(d) < 0.5:
        res = 0.0
        for k in range(44, -1, -1):
            res = res * d + PSI_TAYLOR[k]
        return res * d
    res = 0.0
    while x < 10.0:
        res -= 1.0 / x
        x += 1.0
    z2 = 1.0 / (x * x)
    s = 0.0
    for k in range(6, -1, -1):
        s = s * z2 + PSI_ASYM[k]
    return res + log(x) - 0.5 / x - s * z2


cdef void _gamma_aux(double mu, double* gam1, double* gam2,
                     double* gampl, double* gammi) nogil:
    # Temme's auxiliary functions built from the series of 1/Gamma(1 + z).
    cdef double even = 0.0
    cdef double odd_over_mu = 0.0
    cdef double mu2 = mu * mu
    cdef int k
    for k in range(26, -1, -2):
        even = even * mu2 + RGAM1P[k]
    for k in range(25, 0, -2):
        odd_over_mu = odd_over_mu * mu2 + RGAM1P[k]
    gam1[0] = -odd_over_mu
    gam2[0] = even
    gampl[0] = even + mu * odd_over_mu
    gammi[0] = even - mu * odd_over_mu


# ---------------------------------------------------------------- Bessel J

cdef int _hankel_j(double nu, double x, double* logabs, double* sgn) nogil:
    # Large-argument expansion. Returns 0 when the series is not accurate
    # enough at this (nu, x) and the caller should use the recurrence path.
    cdef double mu = 4.0 * nu * nu
    cdef double p = 1.0
    cdef double q = 0.0
    cdef double t = 1.0
    cdef double at, prev = 1.0, maxterm = 1.0, c, cw, sw, val, odd
    cdef int k
    cdef bint converged = False
    for k in range(1, 200):
        odd = 2.0 * k - 1.0
        t *= (mu - odd * odd) / (8.0 * k * x)
        if k % 2 == 1:
            if (k // 2) % 2 == 0:
                q += t
            else:
                q -= t
        else:
            if (k // 2) % 2 == 0:
                p += t
            else:
                p -= t
        at = fabs(t)
        if at > maxterm:
            maxterm = at
        if at < 1e-17:
            converged = True
            break
        if at > prev and prev < 1.0:
            return 0
        prev = at
    if not converged or maxterm > 10.0:
        return 0
    c = (0.5 * nu + 0.25) * PI
    cw = cos(x) * cos(c) + sin(x) * sin(c)
    sw = sin(x) * cos(c) - cos(x) * sin(c)
    val = p * cw - q * sw
    if val == 0.0:
        logabs[0] = -INFINITY
        sgn[0] = 0.0
        return 1
    logabs[0] = 0.5 * log(2.0 / (PI * x)) + log(fabs(val))
    sgn[0] = 1.0 if val > 0.0 else -1.0
    return 1


cdef int _temme_j(double nu, double x, double* logabs, double* sgn) nogil:
    cdef int nl, i, l, isign
    cdef double xmu, xmu2, xi, xi2, w, h, b, d, c, dl
    cdef double rjl, rjpl, rjl1, rjp1, rjtemp, fact, f, acc
    cdef double x2, pimu, fact2, fact3, e, ff, gam1, gam2, gampl, gammi
    cdef double p, q, r, pimu2, sm, sm1, dl1, rymu, ry1, rymup, rjmu
    cdef double a, br, bi, cr, ci, den, dr, di, dlr, dli, temp, gam

    if x < 2.0:
        nl = <int>(nu + 0.5)
    else:
        nl = <int>(nu - x + 1.5)
        if nl < 0:
            nl = 0
    xmu = nu - nl
    xmu2 = xmu * xmu
    xi = 1.0 / x
    xi2 = 2.0 * xi
    w = xi2 / PI

    # CF1: J'_nu / J_nu
    isign = 1
    h = nu * xi
    if h < FPMIN:
        h = FPMIN
    b = xi2 * nu
    d = 0.0
    c = h
    for i in range(MAXIT):
        b += xi2
        d = b - d
        if fabs(d) < FPMIN:
            d = FPMIN
        c = b - 1.0 / c
        if fabs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        dl = c * d
        h = dl * h
        if d < 0.0:
            isign = -isign
        if fabs(dl - 1.0) <= EPS:
            break
    else:
        return 0

    # downward recurrence to order xmu, rescaled to stay in range
    rjl = isign * FPMIN
    rjpl = h * rjl
    rjl1 = rjl
    rjp1 = rjpl
    fact = nu * xi
    acc = 0.0
    for l in range(nl - 1, -1, -1):
        rjtemp = fact * rjl + rjpl
        fact -= xi
        rjpl = fact * rjtemp - rjl
        rjl = rjtemp
        if fabs(rjl) > BIG:
            rjl /= BIG
            rjpl /= BIG
            acc += LOG_BIG
    if rjl == 0.0:
        rjl = EPS
    f = rjpl / rjl

    if x < 2.0:
        x2 = 0.5 * x
        pimu = PI * xmu
        fact = 1.0 if fabs(pimu) < EPS else pimu / sin(pimu)
        d = -log(x2)
        e = xmu * d
        fact2 = 1.0 if fabs(e) < EPS else sinh(e) / e
        _gamma_aux(xmu, &gam1, &gam2, &gampl, &gammi)
        ff = 2.0 / PI * fact * (gam1 * cosh(e) + gam2 * fact2 * d)
        e = exp(e)
        p = e / (gampl * PI)
        q = 1.0 / (e * PI * gammi)
        pimu2 = 0.5 * pimu
        fact3 = 1.0 if fabs(pimu2) < EPS else sin(pimu2) / pimu2
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
            dl1 = c * p - i * dl
            sm1 += dl1
            if fabs(dl) < (1.0 + fabs(sm)) * EPS:
                break
        else:
            return 0
        rymu = -sm
        ry1 = -sm1 * xi2
        rymup = xmu * xi * rymu - ry1
        rjmu = w / (rymup - f * rymu)
    else:
        # CF2 (Steed): p + iq = (J' + iY') / (J + iY) at order xmu
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
        temp = p * dlr - q * dli
        q = p * dli + q * dlr
        p = temp
        for i in range(1, MAXIT):
            a += 2 * i
            bi += 2.0
            dr = a * dr + br
            di = a * di + bi
            if fabs(dr) + fabs(di) < FPMIN:
                dr = FPMIN
            fact = a / (cr * cr + ci * ci)
            cr = br + cr * fact
            ci = bi - ci * fact
            if fabs(cr) + fabs(ci) < FPMIN:
                cr = FPMIN
            den = dr * dr + di * di
            dr /= den
            di /= -den
            dlr = cr * dr - ci * di
            dli = cr * di + ci * dr
            temp = p * dlr - q * dli
            q = p * dli + q * dlr
            p = temp
            if fabs(dlr - 1.0) + fabs(dli) <= EPS:
                break
        else:
            return 0
        gam = (p - f) / q
        rjmu = sqrt(w / ((p - f) * gam + q))
        if rjl < 0.0:
            rjmu = -rjmu

    if rjmu == 0.0:
        logabs[0] = -INFINITY
        sgn[0] = 0.0
        return 1
    logabs[0] = log(fabs(rjl1)) + log(fabs(rjmu)) - log(fabs(rjl)) - acc
    sgn[0] = 1.0
    if rjl1 < 0.0:
        sgn[0] = -sgn[0]
    if rjmu < 0.0:
        sgn[0] = -sgn[0]
    if rjl < 0.0:
        sgn[0] = -sgn[0]
    return 1


cdef void _series_j(double nu, double x, double* logabs, double* sgn) nogil:
    # power series, used when x^2 <= nu + 1 so the terms fall by 4x or more
    cdef double y = -0.25 * x * x
    cdef double term = 1.0
    cdef double total = 1.0
    cdef int k
    for k in range(1, 200):
        term *= y / (k * (nu + k))
        total += term
        if fabs(term) <= EPS * total:
            break
    # log(x) - ln 2 rather than log(x / 2): halving a subnormal x underflows
    cdef double power = 0.0
    if nu != 0.0:
        power = nu * (log(x) - LN2_HI - LN2_LO)
    logabs[0] = power - c_log_gamma(nu + 1.0) + log(total)
    sgn[0] = 1.0


cdef void c_log_bessel_j(double nu, double x, double* logabs, double* sgn) nogil:
    if isnan(nu) or isnan(x) or nu < 0.0 or x < 0.0:
        logabs[0] = NAN
        sgn[0] = NAN
        return
    if x == 0.0:
        if nu == 0.0:
            logabs[0] = 0.0
            sgn[0] = 1.0
        else:
            logabs[0] = -INFINITY
            sgn[0] = 0.0
        return
    if x == INFINITY:
        logabs[0] = -INFINITY
        sgn[0] = 0.0
        return
    if x * x <= nu + 1.0:
        _series_j(nu, x, logabs, sgn)
        return
    if x >= 25.0 and x >= nu:
        if _hankel_j(nu, x, logabs, sgn):
            return
    if not _temme_j(nu, x, logabs, sgn):
        logabs[0] = NAN
        sgn[0] = NAN


cdef double c_bessel_j(double nu, double x) nogil:
    cdef double la, s
    c_log_bessel_j(nu, x, &la, &s)
    if isnan(la):
        return NAN
    if s == 0.0:
        return 0.0
    return s * exp(la)


cdef double c_bessel_j_root(double nu, double a, double b) nogil:
    # Zero of J_nu inside a sign-changing bracket: secant steps, bisection
    # whenever the secant step leaves the bracket or stalls.
    cdef double fa = c_bessel_j(nu, a)
    cdef double fb = c_bessel_j(nu, b)
    cdef double x, fx, width
    cdef int it
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if isnan(fa) or isnan(fb) or (fa > 0.0) == (fb > 0.0):
        return NAN
    width = b - a
    for it in range(300):
        x = b - fb * (b - a) / (fb - fa)
        if not (a < x < b) or (b - a) > 0.5 * width:
            x = 0.5 * (a + b)
        width = b - a
        fx = c_bessel_j(nu, x)
        if fx == 0.0:
            return x
        if (fx > 0.0) == (fa > 0.0):
            a = x
            fa = fx
        else:
            b = x
            fb = fx
        if b - a <= 4.0 * EPS * fabs(b):
            break
    return a if fabs(fa) < fabs(fb) else b


# ---------------------------------------------------------------- Bessel K

cdef double c_log_bessel_k_scaled(double nu, double x) nogil:
    # ln(e^x K_nu(x)), x > 0
    cdef int nl, i
    cdef double xmu, xmu2, xi, xi2, logk, ratio, prod
    cdef double x2, pimu, fact, d, e, fact2, gam1, gam2, gampl, gammi
    cdef double ff, sm, sm1, p, q, c, dl, dl1
    cdef double b, h, delh, q1, q2, a1, qnew, a, s, dels
    cdef bint scaled
    if isnan(nu) or isnan(x) or x < 0.0:
        return NAN
    if x == 0.0:
        return INFINITY
    if x == INFINITY:
        return -INFINITY
    nu = fabs(nu)
    nl = <int>(nu + 0.5)
    xmu = nu - nl
    xmu2 = xmu * xmu
    xi = 1.0 / x
    xi2 = 2.0 * xi
    if x < 2.0:
        scaled = False
        x2 = 0.5 * x
        pimu = PI * xmu
        fact = 1.0 if fabs(pimu) < EPS else pimu / sin(pimu)
        d = -log(x2)
        e = xmu * d
        fact2 = 1.0 if fabs(e) < EPS else sinh(e) / e
        _gamma_aux(xmu, &gam1, &gam2, &gampl, &gammi)
        ff = fact * (gam1 * cosh(e) + gam2 * fact2 * d)
        sm = ff
        e = exp(e)
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
            dl1 = c * (p - i * ff)
            sm1 += dl1
            if fabs(dl) < fabs(sm) * EPS:
                break
        else:
            return NAN
        logk = log(sm)
        ratio = sm1 / sm * xi2
    else:
        scaled = True
        b = 2.0 * (1.0 + x)
        d = 1.0 / b
        h = d
        delh = d
        q1 = 0.0
        q2 = 1.0
        a1 = 0.25 - xmu2
        q = a1
        c = a1
        a = -a1
        s = 1.0 + q * delh
        for i in range(1, MAXIT):
            a -= 2 * i
            c = -a * c / (i + 1.0)
            qnew = (q1 - b * q2) / a
            q1 = q2
            q2 = qnew
            q += c * qnew
            b += 2.0
            d = 1.0 / (b + a * d)
            delh = (b * d - 1.0) * delh
            h += delh
            dels = q * delh
            s += dels
            if fabs(dels / s) <= EPS:
                break
        else:
            return NAN
        h = a1 * h
        logk = 0.5 * log(PI / (2.0 * x)) - log(s)
        ratio = (xmu + x + 0.5 - h) * xi
    # forward recurrence on K_{j+1} / K_j; nothing here can overflow
    prod = 1.0
    for i in range(1, nl + 1):
        if ratio > 1e100:
            logk += log(ratio)
        else:
            prod *= ratio
            if prod > 1e200:
                logk += log(prod)
                prod = 1.0
        ratio = (xmu + i) * xi2 + 1.0 / ratio
    logk += log(prod)
    if scaled:
        return logk
    return logk + x


# ---------------------------------------------------------------- array API

def log_gamma(double[::1] x):
    cdef Py_ssize_t i, n = x.shape[0]
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = c_log_gamma(x[i])
    return out


def digamma(double[::1] x):
    cdef Py_ssize_t i, n = x.shape[0]
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = c_digamma(x[i])
    return out


def log_abs_bessel_j(double nu, double[::1] x):
    cdef Py_ssize_t i, n = x.shape[0]
    la = np.empty(n)
    sg = np.empty(n)
    cdef double[::1] lv = la
    cdef double[::1] sv = sg
    with nogil:
        for i in range(n):
            c_log_bessel_j(nu, x[i], &lv[i], &sv[i])
    return la, sg


def bessel_j(double nu, double[::1] x):
    cdef Py_ssize_t i, n = x.shape[0]
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = c_bessel_j(nu, x[i])
    return out


def log_bessel_k_scaled(double nu, double[::1] x):
    cdef Py_ssize_t i, n = x.shape[0]
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = c_log_bessel_k_scaled(nu, x[i])
    return out


def bessel_j_root(double nu, double a, double b):
    return c_bessel_j_root(nu, a, b)
