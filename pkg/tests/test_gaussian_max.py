import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from leanci import MaxGaussSpec, anti_concentration, bonferroni_crit, mc_quantile, sidak_crit
from leanci.errors import InvalidLevel, NonPSDCorrelation
from leanci.gaussian_max import sample_max_abs, upper_quantile, z_upper


def z_oracle(gamma):
    """Upper quantile by bisection on P(Z > z) = erfc(z / sqrt 2) / 2."""
    lo, hi = -40.0, 40.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if 0.5 * math.erfc(mid / math.sqrt(2)) > gamma:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def sup_density_max_abs(d):
    # density of max of d iid |N(0,1)|: d (2 Phi - 1)^{d-1} 2 phi
    t = np.linspace(0, 8, 400_001)
    phi = np.exp(-0.5 * t**2) / math.sqrt(2 * math.pi)
    big_phi = np.array([0.5 * math.erfc(-v / math.sqrt(2)) for v in t[::100]])
    big_phi = np.interp(t, t[::100], big_phi)
    return float(np.max(d * (2 * big_phi - 1) ** (d - 1) * 2 * phi))


@pytest.mark.parametrize("gamma", [0.5, 0.25, 0.025, 0.0025, 1e-4, 1e-8])
def test_normal_quantile_against_bisection(gamma):
    assert z_upper(gamma) == pytest.approx(z_oracle(gamma), abs=1e-9)


def test_bonferroni_examples():
    assert bonferroni_crit(1, 0.05) == pytest.approx(z_oracle(0.025), abs=1e-9)
    assert bonferroni_crit(1, 0.05) == pytest.approx(1.959964, abs=1e-5)
    assert bonferroni_crit(10, 0.05) == pytest.approx(2.807034, abs=1e-5)
    assert bonferroni_crit(1, 1 - 1e-12) == pytest.approx(0.0, abs=1e-9)


def test_sidak_examples():
    gamma = 1 - 0.95**0.1
    assert sidak_crit(10, 0.05) == pytest.approx(z_oracle(gamma / 2), abs=1e-9)
    # the closed form gives 2.7996..., not the 2.8065 sometimes quoted
    assert sidak_crit(10, 0.05) == pytest.approx(2.799625, abs=1e-5)
    for alpha in (0.01, 0.05, 0.3, 0.9):
        assert sidak_crit(1, alpha) == bonferroni_crit(1, alpha)


def test_sidak_never_exceeds_bonferroni():
    for d in range(1, 101):
        for alpha in (0.01, 0.05, 0.1):
            assert sidak_crit(d, alpha) <= bonferroni_crit(d, alpha) + 1e-12


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.1, 1.5, float("nan")])
def test_invalid_alpha(bad):
    with pytest.raises(InvalidLevel):
        bonferroni_crit(3, bad)
    with pytest.raises(InvalidLevel):
        sidak_crit(3, bad)


def test_upper_quantile_order_statistic():
    draws = np.arange(1.0, 101.0)[::-1]
    assert upper_quantile(draws, 0.05) == 95.0
    assert upper_quantile(draws, 0.051) == 95.0
    assert upper_quantile(draws, 0.5) == 50.0
    assert upper_quantile(np.array([3.0]), 0.5) == 3.0


def test_mc_quantile_examples():
    z = z_oracle(0.025)
    assert mc_quantile(MaxGaussSpec(np.eye(1), seed=1), 0.05) == pytest.approx(z, abs=0.01)
    assert mc_quantile(MaxGaussSpec(np.eye(10), seed=2), 0.05) == pytest.approx(sidak_crit(10, 0.05), abs=0.01)
    assert mc_quantile(MaxGaussSpec(np.ones((6, 6)), seed=3), 0.05) == pytest.approx(z, abs=0.01)


def test_mc_quantile_monotone_in_alpha():
    draws = sample_max_abs(MaxGaussSpec(0.5 * np.eye(4) + 0.5, seed=4))
    qs = [upper_quantile(draws, a) for a in (0.01, 0.05, 0.1, 0.2, 0.5)]
    assert all(a >= b for a, b in zip(qs, qs[1:]))


def test_mc_quantile_below_sidak():
    gen = np.random.default_rng(8)
    for d in (2, 5, 12):
        a = gen.standard_normal((d, d + 2))
        c = a @ a.T
        s = 1 / np.sqrt(np.diag(c))
        corr = c * np.outer(s, s)
        np.fill_diagonal(corr, 1.0)
        q = mc_quantile(MaxGaussSpec(corr, mc_draws=50_000, seed=d), 0.05)
        assert q <= sidak_crit(d, 0.05) + 0.02


def test_determinism_across_workers():
    spec = MaxGaussSpec(0.3 * np.eye(5) + 0.7, mc_draws=40_000, seed=99)
    a = sample_max_abs(spec, workers=1)
    b = sample_max_abs(spec, workers=4)
    assert np.array_equal(a, b)
    assert mc_quantile(spec, 0.1) == mc_quantile(spec, 0.1, workers=3)


def test_spec_validation():
    with pytest.raises(NonPSDCorrelation):
        MaxGaussSpec(np.array([[1.0, 0.0], [0.0, 2.0]]))
    with pytest.raises(NonPSDCorrelation):
        MaxGaussSpec(np.array([[1.0, 1.5], [1.5, 1.0]]))
    MaxGaussSpec(np.ones((3, 3)))  # singular but PSD


def test_anti_concentration_d1():
    est = anti_concentration(MaxGaussSpec(np.eye(1), mc_draws=1_000_000, seed=5))
    assert est == pytest.approx(2 / math.sqrt(2 * math.pi), abs=0.05)


def test_anti_concentration_tracks_exact_density():
    ests = []
    for d in (5, 25):
        est = anti_concentration(MaxGaussSpec(np.eye(d), mc_draws=1_000_000, seed=d))
        assert est == pytest.approx(sup_density_max_abs(d), abs=0.05)
        ests.append(est)
    assert ests[0] < ests[1]
    # the population constant is not monotone from d=1: 0.798 at d=1 versus 0.740 at d=5
    assert sup_density_max_abs(1) > sup_density_max_abs(5)


def test_anti_concentration_huge_eps():
    assert anti_concentration(MaxGaussSpec(np.eye(3), mc_draws=10_000), eps_grid=(20.0, 50.0)) <= 0.05


@settings(max_examples=25, deadline=None)
@given(d=st.integers(1, 200), alpha=st.floats(1e-6, 0.999))
def test_critical_values_property(d, alpha):
    b = bonferroni_crit(d, alpha)
    s = sidak_crit(d, alpha)
    assert s <= b + 1e-12
    assert s >= z_upper(alpha / 2) - 1e-12
