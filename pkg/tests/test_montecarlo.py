import math

import numpy as np
import pytest
from scipy import integrate, stats

from ueplab import montecarlo as mc
from ueplab.divergence import kl_studentt_gaussian, matched_gaussian
from ueplab.errors import DomainError
from ueplab.radial import EllipticalLaw


# ---------------------------------------------------------------- samplers

def test_gaussian_covariance_is_half_identity():
    x = mc.sample(EllipticalLaw.gaussian(2), 10 ** 5, seed=11)
    cov = x.T @ x / len(x)
    # each entry of the empirical covariance has variance (s_ii s_jj + s_ij^2) / N
    sd = math.sqrt(0.25 / len(x))
    assert abs(cov[0, 0] - 0.5) < 3 * math.sqrt(2) * sd
    assert abs(cov[1, 1] - 0.5) < 3 * math.sqrt(2) * sd
    assert abs(cov[0, 1]) < 3 * sd


def test_student_t_second_moment():
    x = mc.sample(EllipticalLaw.student_t(1, 5), 10 ** 5, seed=12)[:, 0]
    sq = x * x
    assert abs(sq.mean() - 1 / 3) < 4 * sq.std(ddof=1) / math.sqrt(len(sq))


def test_student_r_draws_stay_in_the_ball():
    x = mc.sample(EllipticalLaw.student_r(3, 3), 10 ** 5, seed=13)
    assert np.all(np.sum(x * x, axis=1) <= 1.0)


def test_scale_multiplies_draws():
    law = EllipticalLaw.student_t(2, 4)
    np.testing.assert_array_equal(mc.sample(law.with_scale(2.0), 1000, 5),
                                  2.0 * mc.sample(law, 1000, 5))


def test_reproducible_and_thread_independent(monkeypatch):
    law = EllipticalLaw.student_r(4, 6)
    count = 3 * mc.BLOCK + 17
    monkeypatch.setenv("UEPLAB_THREADS", "1")
    serial = mc.sample(law, count, seed=99)
    est_serial = mc.mc_power_integral(law, 1.5, count, seed=99)
    monkeypatch.setenv("UEPLAB_THREADS", "4")
    assert mc.thread_count() == 4
    np.testing.assert_array_equal(mc.sample(law, count, seed=99), serial)
    assert mc.mc_power_integral(law, 1.5, count, seed=99) == est_serial
    assert not np.array_equal(mc.sample(law, count, seed=100), serial)


def test_prefix_of_a_longer_run_is_shared():
    law = EllipticalLaw.gaussian(3)
    long = mc.sample(law, 2 * mc.BLOCK, seed=8)
    np.testing.assert_array_equal(mc.sample(law, mc.BLOCK, seed=8), long[:mc.BLOCK])


@pytest.mark.parametrize("count", [0, -3, 2.5])
def test_invalid_counts(count):
    with pytest.raises(DomainError):
        mc.sample(EllipticalLaw.gaussian(1), count, seed=1)


def test_custom_law_cannot_be_sampled():
    with pytest.raises(DomainError):
        mc.sample(EllipticalLaw.custom(2, lambda r: -r * r), 10, seed=1)


# ---------------------------------------------------------------- calibration lock-in

def _norm(x):
    return np.sqrt(np.sum(x * x, axis=1))


def _chi_square_pvalue(radii, law, bins=50):
    # equiprobable bins from the model CDF, inverted by interpolation on a fine grid
    grid = np.geomspace(1e-8, 1e8, 200001) * law.scale
    if law.family.value == "student-r":
        grid = grid[grid <= law.scale]
    cdf = mc.radial_cdf(law, grid)
    edges = np.interp(np.linspace(0, 1, bins + 1)[1:-1], cdf, grid)
    counts = np.bincount(np.searchsorted(edges, radii), minlength=bins)
    return stats.chisquare(counts).pvalue


@pytest.mark.parametrize("n,m", [(1, 3), (4, 2.5)])
def test_mixing_calibration_is_decided_by_goodness_of_fit(n, m):
    law = EllipticalLaw.student_t(n, m)
    rng = np.random.default_rng(2024)
    g = rng.standard_normal((10 ** 5, n))
    # inverse-Gamma variance with shape m/2: rate 1/2 is right, rate 2 is not
    right = g / np.sqrt(rng.gamma(0.5 * m, 2.0, len(g)))[:, None]
    wrong = g / np.sqrt(rng.gamma(0.5 * m, 0.5, len(g)))[:, None]
    assert _chi_square_pvalue(_norm(right), law) > 1e-3
    assert _chi_square_pvalue(_norm(wrong), law) < 1e-12
    assert _chi_square_pvalue(_norm(mc.sample(law, 10 ** 5, seed=3)), law) > 1e-3


@pytest.mark.parametrize("law", [EllipticalLaw.gaussian(3), EllipticalLaw.student_t(2, 1),
                                 EllipticalLaw.student_r(2, 2), EllipticalLaw.student_r(6, 9)],
                         ids=lambda law: law.describe())
def test_radial_gof_passes_for_every_family(law):
    _, pvalue = mc.radial_gof(law, 2 * 10 ** 5, seed=31)
    assert pvalue > 1e-3


def test_radial_cdf_matches_scipy_for_student_t():
    # |X|^2 m / n is F(n, m)
    r = np.array([0.1, 0.7, 1.5, 9.0])
    np.testing.assert_allclose(mc.radial_cdf(EllipticalLaw.student_t(3, 4), r),
                               stats.f.cdf(r * r * 4 / 3, 3, 4), rtol=1e-12)


# ---------------------------------------------------------------- estimators

def test_gaussian_square_integral():
    # canonical variance 1/2
    ref, _ = integrate.quad(lambda x: stats.norm.pdf(x, scale=math.sqrt(0.5)) ** 2,
                            -np.inf, np.inf, epsabs=0, epsrel=1e-13)
    assert ref == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-12)
    est = mc.mc_power_integral(EllipticalLaw.gaussian(1), 2.0, 10 ** 5, seed=3)
    assert est.reliable and est.within(ref, 4.0)


def test_cauchy_entropy():
    est = mc.mc_power_integral(EllipticalLaw.student_t(1, 1), 1.0, 10 ** 5, seed=3)
    assert est.within(math.log(4 * math.pi), 4.0)


@pytest.mark.parametrize("law", [EllipticalLaw.student_t(2, 3), EllipticalLaw.student_r(3, 5)],
                         ids=lambda law: law.describe())
def test_disjoint_seeds_agree(law):
    a = mc.mc_power_integral(law, 1.0, 10 ** 5, seed=1)
    b = mc.mc_power_integral(law, 1.0, 10 ** 5, seed=2)
    assert a.mean != b.mean
    assert abs(a.mean - b.mean) <= 6 * math.hypot(a.stderr, b.stderr)


def test_stderr_is_sample_sd_over_root_count():
    law = EllipticalLaw.student_r(2, 5)
    count = 2 * mc.BLOCK + 1000
    est = mc.mc_power_integral(law, 2.0, count, seed=21)
    r = np.sqrt(np.sum(mc.sample(law, count, seed=21) ** 2, axis=1))
    # direct two-pass evaluation of the estimator values from the closed-form density
    log_c = math.lgamma(3.5) - math.lgamma(2.5) - math.log(math.pi)
    vals = np.exp(log_c + 1.5 * np.log1p(-r * r))
    assert est.mean == pytest.approx(vals.mean(), rel=1e-12)
    assert est.stderr == pytest.approx(vals.std(ddof=1) / math.sqrt(count), rel=1e-9)


def test_infinite_variance_is_flagged():
    # f^(2 lam - 1) is not integrable for the Cauchy law at lam = 0.6
    with pytest.warns(RuntimeWarning):
        est = mc.mc_power_integral(EllipticalLaw.student_t(1, 1), 0.6, 10 ** 4, seed=4)
    assert not est.reliable and math.isfinite(est.mean)


def test_power_must_be_positive():
    with pytest.raises(DomainError):
        mc.mc_power_integral(EllipticalLaw.gaussian(1), 0.0, 100, seed=1)


def test_kl_self_divergence_is_zero():
    law = EllipticalLaw.student_t(3, 4)
    est = mc.mc_kl(law, law, 10 ** 4, seed=6)
    assert est.mean == 0.0 and est.within(0.0)


def test_kl_student_t_against_closed_form():
    law = EllipticalLaw.student_t(1, 3)
    # ln f_t - ln f_g grows like x^2 and E x^4 is infinite at m = 3
    with pytest.warns(RuntimeWarning):
        est = mc.mc_kl(law, matched_gaussian(law), 10 ** 6, seed=5)
    assert not est.reliable
    assert est.within(kl_studentt_gaussian(1, 3).forward, 4.0)


def test_kl_support_miss_is_infinite():
    target = EllipticalLaw.student_r(2, 3)
    est = mc.mc_kl(matched_gaussian(target), target, 10 ** 4, seed=7)
    assert est.mean == math.inf and est.within(math.inf)


def test_kl_dimension_mismatch():
    with pytest.raises(DomainError):
        mc.mc_kl(EllipticalLaw.gaussian(1), EllipticalLaw.gaussian(2), 10, seed=1)
