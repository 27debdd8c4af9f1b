import dataclasses

import numpy as np
import pytest
from scipy import stats

from leanci import (
    Dataset, MaxGaussSpec, ci, empirical_cdf_distance, fit, multiplier_bootstrap, sandwich_cov,
    sidak_crit,
)
from leanci.confidence import studentized_max
from leanci.errors import DegenerateVariance, EmptyInput, InvalidLevel, UsageError
from leanci.gaussian_max import sample_max_abs
from leanci.lab import DGPSpec, generate


def _fit(gen, n=400, d=3, rho=0.0):
    c = (1 - rho) * np.eye(d) + rho
    x = gen.standard_normal((n, d)) @ np.linalg.cholesky(c).T
    y = x @ np.linspace(1, -1, d) + (1 + 0.5 * np.abs(x[:, 0])) * gen.standard_normal(n)
    f = fit(Dataset(x, y))
    return f, sandwich_cov(f)


def test_interval_invariants(gen):
    f, cov = _fit(gen)
    for method in ("bonferroni", "sidak", "bootstrap"):
        r = ci(f, cov, method, 0.1, boot_b=500, seed=1)
        np.testing.assert_array_equal(r.lower, f.beta_hat - r.crit * cov.std_err)
        np.testing.assert_array_equal(r.upper, f.beta_hat + r.crit * cov.std_err)
        np.testing.assert_array_equal(r.width, 2 * r.crit * cov.std_err)
        assert np.all(r.width > 0)
        assert r.level == pytest.approx(0.9)


def test_sidak_narrower_than_bonferroni(gen):
    f, cov = _fit(gen, d=6)
    s = ci(f, cov, "sidak", 0.05)
    b = ci(f, cov, "bonferroni", 0.05)
    assert np.all(s.width <= b.width)


def test_d1_bonferroni_equals_sidak(gen):
    y = gen.standard_normal(50)
    f = fit(Dataset(np.ones((50, 1)), y, intercept=True))
    cov = sandwich_cov(f)
    a, b = ci(f, cov, "bonferroni", 0.05), ci(f, cov, "sidak", 0.05)
    np.testing.assert_array_equal(a.lower, b.lower)
    np.testing.assert_array_equal(a.upper, b.upper)


def test_bootstrap_independent_case_near_sidak(gen):
    f, cov = _fit(gen, n=3000, d=5)
    r = ci(f, cov, "bootstrap", 0.05, boot_b=5000, seed=3)
    assert r.crit == pytest.approx(sidak_crit(5, 0.05), abs=0.05)


def test_bootstrap_exploits_positive_correlation(gen):
    f, cov = _fit(gen, n=1000, d=8, rho=0.7)
    boot = ci(f, cov, "bootstrap", 0.05, boot_b=4000, seed=2)
    assert boot.crit <= sidak_crit(8, 0.05) + 0.05


def test_bootstrap_crit_is_order_statistic(gen):
    f, cov = _fit(gen)
    dist = multiplier_bootstrap(f, cov, b=1000, seed=7)
    r = ci(f, cov, "bootstrap", 0.1, boot_b=1000, seed=7)
    assert r.crit == np.sort(dist.draws)[899]
    assert np.all(np.isfinite(dist.draws)) and np.all(dist.draws >= 0)
    assert dist.b == 1000 and dist.draws.size == 1000


def test_bootstrap_d1_is_half_normal(gen):
    y = gen.exponential(size=300)
    f = fit(Dataset(np.ones((300, 1)), y, intercept=True))
    draws = multiplier_bootstrap(f, sandwich_cov(f), b=5000, seed=4).draws
    ref = np.abs(np.random.default_rng(44).standard_normal(200_000))
    assert empirical_cdf_distance(draws, ref) <= 0.03


def test_bootstrap_matches_gaussian_max_law(gen):
    f, cov = _fit(gen, n=400, d=8, rho=0.4)
    boot = multiplier_bootstrap(f, cov, b=5000, seed=11).draws
    direct = sample_max_abs(MaxGaussSpec(cov.corr, mc_draws=5000, seed=12))
    assert empirical_cdf_distance(boot, direct) <= 0.03


def test_score_scale_invariance(gen):
    f, cov = _fit(gen)
    c = 3.7
    f2 = dataclasses.replace(f, scores=f.scores * c)
    cov2 = dataclasses.replace(cov, std_err=cov.std_err * c)
    a = multiplier_bootstrap(f, cov, b=300, seed=5).draws
    b = multiplier_bootstrap(f2, cov2, b=300, seed=5).draws
    np.testing.assert_allclose(a, b, rtol=1e-12)


def test_response_rescaling_keeps_coverage(gen):
    x = gen.standard_normal((200, 3))
    beta = np.array([0.5, 0.0, -0.5])
    for rep in range(20):
        y = x @ beta + gen.standard_normal(200)
        for c in (1.0, 4.0):
            f = fit(Dataset(x, c * y))
            r = ci(f, sandwich_cov(f), "bootstrap", 0.2, boot_b=300, seed=rep)
            if c == 1.0:
                base, hit = r, r.covers(beta)
            else:
                np.testing.assert_allclose(r.width, c * base.width, rtol=1e-10)
                assert r.covers(c * beta) == hit


def test_determinism_across_workers(gen):
    f, cov = _fit(gen)
    a = multiplier_bootstrap(f, cov, b=2000, seed=9, workers=1).draws
    b = multiplier_bootstrap(f, cov, b=2000, seed=9, workers=4).draws
    assert np.array_equal(a, b)


def test_errors(gen):
    f, cov = _fit(gen)
    with pytest.raises(InvalidLevel):
        ci(f, cov, "sidak", 1.0)
    with pytest.raises(UsageError):
        ci(f, cov, "holm", 0.05)
    with pytest.raises(UsageError):
        multiplier_bootstrap(f, cov, b=0)
    with pytest.raises(DegenerateVariance):
        studentized_max(f.scores, np.zeros(f.d), 10, 0, (1,))


def test_unbalanced_scores_are_rejected(gen):
    f, cov = _fit(gen)
    with pytest.raises(AssertionError):
        multiplier_bootstrap(dataclasses.replace(f, scores=f.scores + 1.0), cov, b=10)


def test_ks_distance_trivial_cases():
    a = np.array([1.0, 2.0, 3.0])
    assert empirical_cdf_distance(a, a) == 0.0
    assert empirical_cdf_distance(a, a + 10) == 1.0
    with pytest.raises(EmptyInput):
        empirical_cdf_distance([], a)


def test_ks_distance_matches_scipy():
    g = np.random.default_rng(2)
    for _ in range(5):
        a, b = g.standard_normal(700), g.standard_normal(450) + 0.1
        assert empirical_cdf_distance(a, b) == pytest.approx(stats.ks_2samp(a, b).statistic, abs=1e-12)
    a, b = np.round(g.standard_normal(300), 1), np.round(g.standard_normal(300), 1)
    assert empirical_cdf_distance(a, b) == pytest.approx(stats.ks_2samp(a, b).statistic, abs=1e-12)


def test_ks_two_normal_samples():
    g = np.random.default_rng(3)
    # the 0.99 two-sample critical value at m = n = 5000 is 1.628 * sqrt(2/5000) = 0.0326
    assert empirical_cdf_distance(g.standard_normal(5000), g.standard_normal(5000)) <= 0.04


def test_lab_data_pipeline_runs():
    data, truth = generate(DGPSpec(n=300, d=4, family="misspecified_quadratic", seed=2))
    f = fit(data)
    r = ci(f, sandwich_cov(f), "bootstrap", 0.1, boot_b=200, seed=1)
    assert r.lower.shape == (4,)
