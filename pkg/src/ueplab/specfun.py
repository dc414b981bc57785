"""Special functions: log-gamma, digamma, Bessel J and scaled Bessel K.

Thin validated wrappers over the kernel backend chosen in ``_backend``.
Scalars in give floats out; array-likes give arrays of the same shape.
"""

import math
import threading

import numpy as np

from ueplab._backend import BACKEND, kernels
from ueplab.errors import DomainError, NonConvergenceError

__all__ = [
    "BACKEND", "log_gamma", "digamma", "bessel_j", "log_abs_bessel_j",
    "log_bessel_k_scaled", "bessel_j_zero", "bessel_j_zeros",
    "log_gamma_ratio", "NU_MAX",
]

# Largest Bessel J order accepted; Student-r sums up to n = 64 need about 48.
NU_MAX = 512.0

# Smallest spacing between consecutive zeros of J_nu over all nu >= 0 is
# j_{0,2} - j_{0,1} = 3.1153...; scanning in unit steps from 3 past a zero
# therefore never skips one.
_MIN_ZERO_GAP = 3.0


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _finish(out, scalar):
    return float(out[0]) if scalar else out


def _check_nan(values, inputs, what):
    bad = np.isnan(values) & ~np.isnan(inputs)
    if bad.any():
        raise NonConvergenceError(
            f"{what} failed to converge at x={inputs[bad][0]!r}")


def log_gamma(x):
    """ln Gamma(x) for x > 0."""
    arr, scalar = _as_array(x)
    flat = np.ascontiguousarray(arr.ravel())
    if np.any(~(flat > 0) | np.isinf(flat)):
        raise DomainError("log_gamma needs finite x > 0")
    out = kernels.log_gamma(flat)
    return _finish(out if scalar else out.reshape(arr.shape), scalar)


def digamma(x):
    """psi(x) = d/dx ln Gamma(x) for x > 0."""
    arr, scalar = _as_array(x)
    flat = np.ascontiguousarray(arr.ravel())
    if np.any(~(flat > 0) | np.isinf(flat)):
        raise DomainError("digamma needs finite x > 0")
    out = kernels.digamma(flat)
    return _finish(out if scalar else out.reshape(arr.shape), scalar)


def log_gamma_ratio(a, b):
    """ln Gamma(a) - ln Gamma(b)."""
    return log_gamma(a) - log_gamma(b)


def _check_order(nu):
    nu = float(nu)
    if not 0.0 <= nu <= NU_MAX:
        raise DomainError(f"Bessel J order must lie in [0, {NU_MAX:g}], got {nu}",
                          threshold=NU_MAX)
    return nu


def log_abs_bessel_j(nu, x):
    """Return ``(ln|J_nu(x)|, sign J_nu(x))``; sign is 0 at exact zeros.

    Stays finite where J_nu itself underflows, e.g. large order with small
    argument.
    """
    nu = _check_order(nu)
    arr, scalar = _as_array(x)
    flat = np.ascontiguousarray(arr.ravel())
    if np.any(~(flat >= 0)):
        raise DomainError("bessel_j needs x >= 0")
    la, sg = kernels.log_abs_bessel_j(nu, flat)
    _check_nan(la, flat, "bessel_j")
    if scalar:
        return float(la[0]), float(sg[0])
    return la.reshape(arr.shape), sg.reshape(arr.shape)


def bessel_j(nu, x):
    """Bessel function of the first kind J_nu(x), nu >= 0, x >= 0."""
    nu = _check_order(nu)
    arr, scalar = _as_array(x)
    flat = np.ascontiguousarray(arr.ravel())
    if np.any(~(flat >= 0)):
        raise DomainError("bessel_j needs x >= 0")
    out = kernels.bessel_j(nu, flat)
    _check_nan(out, flat, "bessel_j")
    return _finish(out if scalar else out.reshape(arr.shape), scalar)


def log_bessel_k_scaled(nu, x):
    """ln(e^x K_nu(x)) for x > 0. Symmetric in nu."""
    nu = float(nu)
    if math.isnan(nu) or math.isinf(nu):
        raise DomainError("Bessel order must be finite")
    arr, scalar = _as_array(x)
    flat = np.ascontiguousarray(arr.ravel())
    if np.any(~(flat > 0)):
        raise DomainError("log_bessel_k_scaled needs x > 0")
    out = kernels.log_bessel_k_scaled(nu, flat)
    _check_nan(out, flat, "log_bessel_k_scaled")
    return _finish(out if scalar else out.reshape(arr.shape), scalar)


# ---------------------------------------------------------------- zeros

def _sign_j(nu, x):
    return math.copysign(1.0, kernels.bessel_j(nu, np.array([x]))[0])


def _zero_after(nu, start, sign_start):
    """First zero of J_nu beyond ``start``, given no zero in (prev, start]."""
    a = start
    while True:
        b = a + 1.0
        sb = kernels.bessel_j(nu, np.array([b]))[0]
        if sb == 0.0:
            return b
        if math.isnan(sb):
            raise NonConvergenceError("bessel_j failed while bracketing zero")
        if (sb > 0.0) != (sign_start > 0.0):
            root = kernels.bessel_j_root(nu, a, b)
            if math.isnan(root):
                raise NonConvergenceError("zero polishing failed")
            return root
        a = b


class _ZeroTable:
    """Zeros of J_nu found so far, in order; grown on demand."""

    def __init__(self, nu):
        self.nu = nu
        self.zeros = []
        self.lock = threading.Lock()

    def upto(self, count):
        with self.lock:
            nu = self.nu
            while len(self.zeros) < count:
                if not self.zeros:
                    # no zeros of J_nu in (0, nu]
                    start = max(nu, 0.5)
                else:
                    start = self.zeros[-1] + _MIN_ZERO_GAP
                self.zeros.append(_zero_after(nu, start, _sign_j(nu, start)))
            return self.zeros[:count]


_TABLES = {}
_TABLES_LOCK = threading.Lock()
_TABLE_LIMIT = 64


def _table(nu):
    with _TABLES_LOCK:
        tab = _TABLES.get(nu)
        if tab is None:
            if len(_TABLES) >= _TABLE_LIMIT:
                _TABLES.pop(next(iter(_TABLES)))
            tab = _TABLES[nu] = _ZeroTable(nu)
        return tab


def _mcmahon(nu, k):
    mu = 4.0 * nu * nu
    beta = (k + 0.5 * nu - 0.25) * math.pi
    e = 8.0 * beta
    return (beta - (mu - 1.0) / e
            - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * e ** 3)
            - 32.0 * (mu - 1.0) * (83.0 * mu * mu - 982.0 * mu + 3779.0)
            / (15.0 * e ** 5))


def _mcmahon_reliable(nu, k):
    # the expansion is in powers of nu^2 / beta; keep well inside it
    beta = (k + 0.5 * nu - 0.25) * math.pi
    return beta > 4.0 * nu * nu + 30.0


def bessel_j_zero(nu, k):
    """The k-th positive zero j_{nu,k} of J_nu (k >= 1).

    Large k are seeded from McMahon's expansion and polished inside a
    bracket narrower than the zero spacing; small k come from an ordered
    scan, which cannot skip a zero.
    """
    nu = _check_order(nu)
    if int(k) != k or k < 1:
        raise DomainError("zero index must be a positive integer")
    k = int(k)
    if _mcmahon_reliable(nu, k):
        seed = _mcmahon(nu, k)
        a, b = seed - 1.4, seed + 1.4
        root = kernels.bessel_j_root(nu, a, b)
        if not math.isnan(root):
            return float(root)
    return float(_table(nu).upto(k)[-1])


def bessel_j_zeros(nu, count):
    """First ``count`` positive zeros of J_nu as an array."""
    nu = _check_order(nu)
    return np.array(_table(nu).upto(int(count)))
