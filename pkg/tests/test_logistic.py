import math

import numpy as np
import pytest
from scipy import special, stats

from mcbound.ifs import sample_stationary, simulate_forward
from mcbound.logistic import (LogisticModel, Q, compute_logistic_constants, coupling_decay,
                              density_mass, exact_one_step_tv, fit_decay_rate,
                              lemma_logwass_check, logistic_system, one_step_tv_quadrature,
                              rate_transfer_check, sample_based_decay, small_set_mass_check,
                              transition_cdf, transition_density, tv_from_wasserstein_logistic)
from mcbound.rng import RngStream


def test_model_domain():
    with pytest.raises(ValueError):
        LogisticModel(0.5)
    assert LogisticModel(0.75).noise_params == (1.25, 0.25)


# --- system ------------------------------------------------------------------------

def test_critical_point():
    sysm = logistic_system(LogisticModel(2.0))
    w = np.array([0.5])
    assert sysm.apply(w, 0.5) == 0.5
    assert sysm.local_lipschitz(w, 0.5) == 0.0


def test_lipschitz_finite_differences():
    sysm = logistic_system(LogisticModel(1.3))
    gen = np.random.default_rng(0)
    for _ in range(100):
        b, x = gen.uniform(0.01, 0.99), gen.uniform(0.01, 0.99)
        h = 1e-6
        fd = (sysm.apply(np.array([b]), x + h) - sysm.apply(np.array([b]), x - h)) / (2 * h)
        assert abs(sysm.local_lipschitz(np.array([b]), x) - abs(fd)) <= 1e-6


@pytest.mark.slow
def test_long_run_mean_a1():
    sysm = logistic_system(LogisticModel(1.0))
    x = simulate_forward(sysm, 0.3, 200, RngStream(7), replicas=100_000)
    se = x.std(ddof=1) / math.sqrt(x.size)
    assert abs(x.mean() - 0.5) < 3 * se


# --- transition density ------------------------------------------------------------------

def test_density_outside_support():
    m = LogisticModel(2.0)
    assert transition_density(m, 0.1, [0.5, 0.9]).tolist() == [0.0, 0.0]
    assert transition_density(m, 0.1, [-0.1]).tolist() == [0.0]


@pytest.mark.parametrize("a", [0.75, 1.0, 2.0, 3.0])
def test_density_normalization(a):
    m = LogisticModel(a)
    for x in np.linspace(0.02, 0.98, 20):
        assert density_mass(m, x) == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("a", [0.75, 2.0])
def test_one_step_matches_density(a):
    m = LogisticModel(a)
    s = simulate_forward(logistic_system(m), 0.3, 1, RngStream(3), replicas=100_000)
    assert stats.kstest(s, lambda z: transition_cdf(m, 0.3, z)).pvalue > 0.01


@pytest.mark.parametrize("a", [1.0, 2.0])
def test_beta_stationarity(a):
    m = LogisticModel(a)
    sysm = logistic_system(m)
    pi = sample_stationary(sysm, "exact", 100_000, RngStream(1)).values
    step = sysm.apply(sysm.sample_noise(RngStream(2), 1, pi.size), pi)
    fresh = sample_stationary(sysm, "exact", 100_000, RngStream(3)).values
    assert stats.ks_2samp(step, fresh).pvalue > 0.01


# --- one-step TV ----------------------------------------------------------------------------

def test_lemma_equal_points():
    chk = lemma_logwass_check(LogisticModel(2.0), 0.3, 0.3)
    assert chk.lhs == 0 and chk.holds


def test_lemma_example_a2():
    chk = lemma_logwass_check(LogisticModel(2.0), 0.5, 0.4)
    assert chk.rhs == pytest.approx(1.6)
    assert chk.lhs <= 1.0


@pytest.mark.parametrize("a", [0.75, 1.0, 2.0])
def test_symmetric_pair_zero(a):
    for x in (0.1, 0.2, 0.37):
        assert lemma_logwass_check(LogisticModel(a), x, 1 - x).lhs == 0.0


@pytest.mark.parametrize("a", [0.75, 1.0, 1.5, 2.0, 3.0])
def test_quadrature_matches_closed_form(a):
    m = LogisticModel(a)
    gen = np.random.default_rng(int(a * 4))
    for x, y in gen.uniform(0.02, 0.98, (15, 2)):
        assert one_step_tv_quadrature(m, x, y) == pytest.approx(
            float(exact_one_step_tv(m, x, y)), abs=1e-8)


def test_closed_form_vectorized():
    m = LogisticModel(2.0)
    x = np.array([0.1, 0.2, 0.3])
    y = np.array([0.5, 0.2, 0.7])
    v = exact_one_step_tv(m, x, y)
    assert v.shape == (3,) and v[1] == 0 and v[2] == 0


@pytest.mark.parametrize("a", [1.5, 2.0, 3.0])
def test_lemma_holds_for_large_a(a):
    m = LogisticModel(a)
    g = np.linspace(0.05, 0.95, 20)
    for x in g:
        for y in g:
            assert lemma_logwass_check(m, x, y, strict=False).holds


def test_lemma_counterexample_small_a():
    # For a < 3/2 the density blows up at Q(x) and nearby points separate too fast.
    chk = lemma_logwass_check(LogisticModel(0.75), 0.3, 0.31, strict=False)
    assert not chk.holds
    assert chk.lhs == pytest.approx(0.39602, abs=1e-4)
    with pytest.raises(AssertionError):
        lemma_logwass_check(LogisticModel(0.75), 0.3, 0.31)


def test_lemma_domain():
    with pytest.raises(ValueError):
        lemma_logwass_check(LogisticModel(2.0), 0.0, 0.5)


# --- constants ---------------------------------------------------------------------------------

def test_constants_a1():
    c = compute_logistic_constants(LogisticModel(1.0))
    assert c.K_tilde_a == pytest.approx(1.0)
    assert c.B == pytest.approx(8.0)
    assert c.eps0 == 1 / 16 and c.q == 1.0
    assert c.C_tilde_a == pytest.approx(4.0)
    assert c.exponent == 0.5


def test_constants_small_a_branch():
    a = 0.75
    c = compute_logistic_constants(LogisticModel(a))
    kt = special.gamma(2 * a) / special.gamma(a) ** 2
    assert c.B == pytest.approx(2 * kt * 4 ** a * a ** (a - 1))
    assert 1 / 3 < c.exponent < 1


def test_constants_positive():
    for a in (0.6, 1.0, 2.5, 10.0):
        c = compute_logistic_constants(LogisticModel(a))
        assert c.B > 0 and c.C_tilde_a > 0 and c.C_tilde_a_corrected > 0
        assert c.B_corrected == 2 * c.B


def test_tv_from_wasserstein_zero():
    f = tv_from_wasserstein_logistic(LogisticModel(2.0), lambda n: 0.0)
    assert f(1) == 0 and f(10) == 0
    with pytest.raises(ValueError):
        f(0)


def test_tv_from_wasserstein_geometric():
    m = LogisticModel(2.0)
    rho = 0.8
    f = tv_from_wasserstein_logistic(m, lambda n: rho ** n, "printed")
    c = compute_logistic_constants(m)
    for n in (1, 5, 20):
        assert f(n) == pytest.approx(c.C_tilde_a * rho ** ((n - 1) * 2 / 3))
    assert f(21) / f(20) == pytest.approx(rho ** (2 / 3))
    assert f.constant == c.C_tilde_a


# --- small set -----------------------------------------------------------------------------------

def test_small_set_a1_printed_constant_fails():
    (r,) = small_set_mass_check(LogisticModel(1.0), [1 / 32])
    assert r.mass_cover == pytest.approx(0.5)
    assert r.bound == pytest.approx(0.25)
    assert not r.holds
    assert r.holds_corrected


def test_small_set_a2():
    (r,) = small_set_mass_check(LogisticModel(2.0), [1 / 64])
    assert r.mass_cover == pytest.approx(0.3125)
    assert r.bound == pytest.approx(0.1875)
    assert not r.holds and r.holds_corrected


@pytest.mark.parametrize("a", [0.75, 1.0, 2.0, 3.0])
def test_small_set_corrected_holds_on_range(a):
    m = LogisticModel(a)
    eps = compute_logistic_constants(m).eps0 * np.geomspace(1e-4, 1, 30)
    for r in small_set_mass_check(m, eps):
        assert r.holds_corrected
        assert r.mass_exact <= r.mass_cover


def test_small_set_limit_bounded():
    # Leading order 2 K~ (8a eps)^a / a equals B_corrected eps^a: the corrected constant is tight.
    m = LogisticModel(2.0)
    c = compute_logistic_constants(m)
    rs = small_set_mass_check(m, [1e-3, 1e-4, 1e-5, 1e-6])
    ratios = [r.mass_cover / r.epsilon ** 2 for r in rs]
    assert ratios[-1] == pytest.approx(c.B_corrected, rel=1e-4)
    assert max(ratios) <= c.B_corrected


def test_small_set_range():
    with pytest.raises(ValueError):
        small_set_mass_check(LogisticModel(1.0), [0.1])


# --- decay rates ---------------------------------------------------------------------------------

def test_fit_decay_rate_exact():
    n = np.arange(10, 20)
    fit = fit_decay_rate(n, 3 * 0.7 ** n)
    assert fit.rate == pytest.approx(0.7)
    with pytest.raises(ValueError):
        fit_decay_rate([1, 2], [0.1, 0.05])


def test_coupling_decay_monotone():
    d = coupling_decay(LogisticModel(2.0), 0.3, [1, 5, 10, 20], 20_000, RngStream(1))
    assert d["wasserstein"][0] > d["wasserstein"][-1]
    assert all(0 <= t <= 1 for t in d["tv"])


@pytest.mark.slow
def test_rate_transfer_a2():
    res = rate_transfer_check(LogisticModel(2.0), replicas=100_000)
    assert res["pass"]
    assert res["tv_fit"]["rate"] < 1 and res["wasserstein_fit"]["rate"] < 1


@pytest.mark.slow
def test_wasserstein_tv_sandwich_a2():
    # d_W <= d_TV on a diameter-1 space; smoothed TV carries a 2h slack.
    from mcbound.metrics import tv_empirical_smoothed, wasserstein1_empirical
    m = LogisticModel(2.0)
    sysm = logistic_system(m)
    fwd = simulate_forward(sysm, 0.3, 4, RngStream(8), replicas=50_000, record=[1, 2, 4])
    pi = sample_stationary(sysm, "exact", 50_000, RngStream(9)).values
    for n in (1, 2, 4):
        w = wasserstein1_empirical(fwd[n], pi, 0).value
        tv = tv_empirical_smoothed(fwd[n], pi, support=(0.0, 1.0), n_boot=0)
        assert w <= tv.value + 2 * tv.bandwidth


def test_sample_based_decay_shapes():
    d = sample_based_decay(LogisticModel(2.0), 0.3, [1, 3], 5_000, RngStream(2))
    assert len(d["wasserstein"]) == len(d["tv_smoothed"]) == 2


def test_q_symmetry():
    x = np.linspace(0.01, 0.99, 50)
    assert np.allclose(Q(x), Q(1 - x), rtol=1e-12)
