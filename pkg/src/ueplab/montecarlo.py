"""Monte-Carlo samplers and estimators used as independent oracles.

Draws come from the stochastic representations of each family:

* Gaussian: scale * G / sqrt(2) with G standard normal;
* Student-t: scale * G / sqrt(W), W ~ chi-square with m degrees of freedom,
  i.e. G scaled by an inverse-Gamma(m/2, 1/2) variance;
* Student-r: scale * G / sqrt(|G|^2 + B), B ~ Gamma((m - n + 2)/2, scale 2).

Streams: the user seed feeds ``numpy.random.SeedSequence``; the draw
sequence is cut into fixed blocks of ``BLOCK`` rows and block k uses the
k-th spawned child. Output is therefore identical for any thread count.
"""

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from ueplab.errors import DomainError
from ueplab.radial import EllipticalLaw, Family, log_pdf_nd

__all__ = [
    "MCEstimate", "sample", "mc_power_integral", "mc_kl", "radial_gof",
    "radial_cdf", "BLOCK", "thread_count",
]

BLOCK = 1 << 16
# beyond this kurtosis proxy a standard error is not trusted
_KURTOSIS_LIMIT = 1e4


def thread_count():
    """Worker threads: UEPLAB_THREADS if set, else the available cores."""
    env = os.environ.get("UEPLAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return max(1, os.cpu_count() or 1)


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    stderr: float
    samples: int
    seed: int
    reliable: bool = True
    note: str = ""

    def within(self, value, k=4.0, value_error=0.0):
        """True when ``value`` lies within k combined standard errors of the mean.

        ``value_error`` is the uncertainty of ``value`` itself, e.g. the
        quadrature tolerance of a reference; it matters when the estimator
        has (near) zero variance, as for uniform laws.
        """
        if math.isinf(self.mean) or math.isinf(value):
            return self.mean == value
        return abs(self.mean - value) <= k * math.hypot(self.stderr, value_error)


def _draw_block(law, rows, seq, with_gap=False):
    """Draws of one block; with ``with_gap`` also 1 - (|x|/scale)^2 for Student-r."""
    rng = np.random.Generator(np.random.PCG64(seq))
    n = law.n
    g = rng.standard_normal((rows, n))
    gap = None
    if law.family is Family.GAUSSIAN:
        x = g * math.sqrt(0.5)
    elif law.family is Family.STUDENT_T:
        w = rng.chisquare(law.m, rows)
        x = g / np.sqrt(w)[:, None]
    elif law.family is Family.STUDENT_R:
        b = rng.gamma(0.5 * (law.m - law.n + 2.0), 2.0, rows)
        denom = np.sum(g * g, axis=1) + b
        x = g / np.sqrt(denom)[:, None]
        gap = b / denom
    else:
        raise DomainError("sampling needs an analytic family")
    x = x * law.scale
    return (x, gap) if with_gap else x


def _blocks(count):
    full, rest = divmod(count, BLOCK)
    return [BLOCK] * full + ([rest] if rest else [])


def _map_blocks(fn, law, count, seed, with_gap=False):
    """Apply fn to every block of draws, in block order."""
    if int(count) != count or count < 1:
        raise DomainError("sample count must be a positive integer")
    sizes = _blocks(int(count))
    seqs = np.random.SeedSequence(int(seed)).spawn(len(sizes))

    def work(i):
        return fn(_draw_block(law, sizes[i], seqs[i], with_gap))
    workers = min(thread_count(), len(sizes))
    if workers <= 1:
        return [work(i) for i in range(len(sizes))]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(work, range(len(sizes))))


def sample(law: EllipticalLaw, count: int, seed: int) -> np.ndarray:
    """``count`` independent draws of ``law`` as an array of shape (count, n)."""
    return np.concatenate(_map_blocks(lambda x: x, law, count, seed))


def _moments(values):
    """(count, mean, M2, M4 proxy sum) of one block."""
    k = values.size
    mean = float(np.mean(values))
    dev = values - mean
    return k, mean, float(np.dot(dev, dev)), float(np.sum(dev ** 4))


def _merge(blocks):
    """Chan et al. pairwise update of block means and squared deviations."""
    count, mean, m2 = 0, 0.0, 0.0
    for k, mu, s2, _ in blocks:
        if k == 0:
            continue
        total = count + k
        delta = mu - mean
        mean += delta * k / total
        m2 += s2 + delta * delta * count * k / total
        count = total
    return count, mean, m2


def _estimate(blocks, seed, reliable=True, note=""):
    count, mean, m2 = _merge(blocks)
    var = m2 / (count - 1) if count > 1 else math.inf
    stderr = math.sqrt(var / count)
    # kurtosis proxy: fourth central moment over the squared variance,
    # approximated blockwise around each block mean
    m4 = sum(b[3] for b in blocks) / count
    if var > 0 and math.isfinite(var):
        kurt = m4 / (var * var)
        if kurt > _KURTOSIS_LIMIT:
            reliable = False
            note = (note + "; " if note else "") + f"kurtosis proxy {kurt:.3g} exceeds limit"
    if not reliable:
        warnings.warn(f"Monte-Carlo estimate may be unreliable: {note}", RuntimeWarning,
                      stacklevel=3)
    return MCEstimate(mean, stderr, count, int(seed), reliable, note)


def _variance_finite(law, lam):
    """Whether the integral of f^(2 lam - 1), the estimator's second moment, exists."""
    mu = 2.0 * lam - 1.0
    n, m = law.n, law.m
    if law.family is Family.GAUSSIAN:
        return mu > 0
    if law.family is Family.STUDENT_T:
        return mu > 0 and mu * (n + m) > n
    if law.family is Family.STUDENT_R:
        return m == n or mu * 0.5 * (m - n) > -1.0
    return True


def mc_power_integral(law: EllipticalLaw, lam: float, count: int, seed: int
                      ) -> MCEstimate:
    """Estimate the integral of f^lam as E_f[f^(lam - 1)].

    lam = 1 estimates the Shannon entropy E_f[-ln f] instead. When the
    estimator provably has infinite variance the estimate is still returned
    with ``reliable=False``.
    """
    lam = float(lam)
    if not lam > 0:
        raise DomainError("power must be positive", threshold=0.0)

    def block(draw):
        x, gap = draw
        lf = log_pdf_nd(law, np.sqrt(np.sum(x * x, axis=1)), gap)
        vals = -lf if lam == 1.0 else np.exp((lam - 1.0) * lf)
        return _moments(vals)

    reliable, note = True, ""
    if lam != 1.0 and not _variance_finite(law, lam):
        reliable, note = False, "estimator variance is infinite for this power"
    return _estimate(_map_blocks(block, law, count, seed, True), seed, reliable, note)


def mc_kl(law_a: EllipticalLaw, law_b: EllipticalLaw, count: int, seed: int
          ) -> MCEstimate:
    """Estimate D_kl(A || B) = E_A[ln f_A - ln f_B]; inf on a support miss."""
    if law_a.n != law_b.n:
        raise DomainError("laws must share the dimension n")

    def block(draw):
        x, gap = draw
        r = np.sqrt(np.sum(x * x, axis=1))
        gap_b = gap if law_b == law_a else None
        lb = log_pdf_nd(law_b, r, gap_b)
        if np.any(np.isneginf(lb)):
            return None
        return _moments(log_pdf_nd(law_a, r, gap) - lb)

    blocks = _map_blocks(block, law_a, count, seed, True)
    if any(b is None for b in blocks):
        return MCEstimate(math.inf, 0.0, int(count), int(seed), True,
                          "draws fell outside the support of the second law")
    return _estimate(blocks, seed)


def radial_cdf(law: EllipticalLaw, r):
    """CDF of |X| through the Beta/Gamma law of the squared radius."""
    r = np.asarray(r, dtype=float) / law.scale
    n, m = law.n, law.m
    s = r * r
    if law.family is Family.GAUSSIAN:
        return stats.gamma.cdf(s, 0.5 * n)
    if law.family is Family.STUDENT_T:
        return stats.beta.cdf(s / (1.0 + s), 0.5 * n, 0.5 * m)
    if law.family is Family.STUDENT_R:
        return stats.beta.cdf(np.minimum(s, 1.0), 0.5 * n, 0.5 * (m - n) + 1.0)
    raise DomainError("radial CDF needs an analytic family")


def _radial_ppf(law, u):
    n, m = law.n, law.m
    if law.family is Family.GAUSSIAN:
        s = stats.gamma.ppf(u, 0.5 * n)
    elif law.family is Family.STUDENT_T:
        b = stats.beta.ppf(u, 0.5 * n, 0.5 * m)
        with np.errstate(divide="ignore"):
            s = b / (1.0 - b)
    else:
        s = stats.beta.ppf(u, 0.5 * n, 0.5 * (m - n) + 1.0)
    return np.sqrt(s) * law.scale


def radial_gof(law: EllipticalLaw, count: int, seed: int, bins: int = 50):
    """Chi-square goodness of fit of sampled radii; returns (statistic, p-value).

    Bins are equiprobable under the model, so each expects count/bins draws.
    """
    edges = _radial_ppf(law, np.linspace(0.0, 1.0, bins + 1))
    edges[0], edges[-1] = 0.0, np.inf

    def block(x):
        r = np.sqrt(np.sum(x * x, axis=1))
        return np.histogram(r, bins=edges)[0]

    counts = np.sum(_map_blocks(block, law, count, seed), axis=0)
    expected = count / bins
    statistic = float(np.sum((counts - expected) ** 2) / expected)
    return statistic, float(stats.chi2.sf(statistic, bins - 1))
