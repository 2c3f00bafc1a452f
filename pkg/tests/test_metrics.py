import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special, stats

from mcbound.gibbs import default_wasserstein_bound, gibbs_system, reference_case, tv_bound
from mcbound.ifs import sample_stationary, simulate_forward
from mcbound.logistic import LogisticModel, logistic_system
from mcbound.metrics import (DensitySpec, EmpiricalDistance, SampleSet, equalize_sizes,
                             normal_density, quantile_coupling_distance, silverman_bandwidth,
                             tv_empirical_smoothed, tv_from_densities, tv_normal_shift,
                             tv_scale_normal, wasserstein1_empirical, wasserstein_to_tv_constant)
from mcbound.rng import RngStream


def uniform_density(lo, hi):
    return DensitySpec(lambda z: 1.0 / (hi - lo) if lo <= z <= hi else 0.0, (lo, hi))


# --- SampleSet / EmpiricalDistance -----------------------------------------

def test_sample_set_invariants():
    with pytest.raises(ValueError):
        SampleSet([])
    with pytest.raises(ValueError):
        SampleSet([2.0, 1.0], sorted_flag=True)
    assert SampleSet([3, 1, 2]).sorted().values.tolist() == [1, 2, 3]


def test_empirical_distance_invariants():
    with pytest.raises(ValueError):
        EmpiricalDistance(-0.1, 5, 0.0, "wasserstein")
    with pytest.raises(ValueError):
        EmpiricalDistance(1.5, 5, 0.0, "tv")
    with pytest.raises(ValueError):
        EmpiricalDistance(0.1, 5, 0.0, "hellinger")


# --- W1 ------------------------------------------------------------------

def test_w1_examples():
    assert wasserstein1_empirical([1, 2, 3], [1, 2, 3]).value == 0
    assert wasserstein1_empirical([0, 1], [1, 2]).value == 1
    assert wasserstein1_empirical([1, 0], [2, 1]).value == 1
    assert wasserstein1_empirical([0.0], [-2.5]).value == 2.5


def test_w1_errors():
    with pytest.raises(ValueError):
        wasserstein1_empirical([], [1.0])
    with pytest.raises(ValueError):
        wasserstein1_empirical([1.0, 2.0], [1.0])


def test_w1_matches_brute_force_small():
    from itertools import permutations
    gen = np.random.default_rng(1)
    for _ in range(20):
        a, b = gen.normal(size=5), gen.normal(size=5)
        brute = min(np.mean(np.abs(a - b[list(p)])) for p in permutations(range(5)))
        assert wasserstein1_empirical(a, b, n_boot=0).value == pytest.approx(brute, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 30).flatmap(
    lambda n: st.tuples(*[st.lists(st.floats(-100, 100), min_size=n, max_size=n)] * 3)))
def test_w1_metric_axioms(triple):
    a, b, c = triple
    d = lambda u, v: wasserstein1_empirical(u, v, n_boot=0).value
    assert d(a, a) == 0
    assert d(a, b) == pytest.approx(d(b, a), abs=1e-9)
    assert d(a, c) <= d(a, b) + d(b, c) + 1e-9
    if d(a, b) == 0:
        assert sorted(a) == sorted(b)


def test_w1_bootstrap_error():
    gen = np.random.default_rng(0)
    est = wasserstein1_empirical(gen.normal(size=2000), gen.normal(0.5, size=2000), rng=RngStream(1))
    assert abs(est.value - 0.5) < 4 * est.std_error
    assert est.std_error == pytest.approx(math.hypot(est.bootstrap_sd, est.bias))
    single = wasserstein1_empirical([1.0], [2.0])
    assert math.isnan(single.std_error)


def test_w1_bootstrap_reproducible():
    gen = np.random.default_rng(0)
    a, b = gen.normal(size=500), gen.normal(size=500)
    assert (wasserstein1_empirical(a, b, rng=RngStream(3)).std_error
            == wasserstein1_empirical(a, b, rng=RngStream(3)).std_error)


def test_equalize_sizes():
    a, b = equalize_sizes(np.arange(100.0), np.arange(10.0), RngStream(1))
    assert len(a) == len(b) == 10
    assert set(a.values) <= set(range(100))
    a2, b2 = equalize_sizes([1.0, 2.0], [3.0, 4.0], RngStream(1))
    assert a2.values.tolist() == [1.0, 2.0]


def test_quantile_coupling_distance():
    d = quantile_coupling_distance(np.array([0.0, 1.0]), np.array([1.0, 3.0]))
    assert d.value == 1.5
    with pytest.raises(ValueError):
        quantile_coupling_distance(np.array([]), np.array([]))


# --- density TV ------------------------------------------------------------

def test_tv_identical_densities():
    assert tv_from_densities(normal_density(), normal_density()) == pytest.approx(0, abs=1e-10)


def test_tv_shifted_uniforms():
    assert tv_from_densities(uniform_density(0, 1), uniform_density(0.5, 1.5)) == pytest.approx(0.5, abs=1e-8)


def test_tv_normal_shift():
    v = tv_from_densities(normal_density(), normal_density(1.0))
    assert v == pytest.approx(tv_normal_shift(1.0), abs=1e-8)
    assert v == pytest.approx(0.3829, abs=5e-5)
    assert v <= 1 / math.sqrt(2 * math.pi)


def test_normalization_failure():
    bad = DensitySpec(lambda z: 2.0, (0.0, 1.0))
    with pytest.raises(ValueError):
        tv_from_densities(bad, uniform_density(0, 1))


def test_tv_scale_normal_examples():
    assert tv_scale_normal(2.0, 2.0) == 0
    assert tv_scale_normal(1.0, 4.0) <= 0.75
    num = tv_from_densities(normal_density(0, 1.0), normal_density(0, 1 / math.sqrt(2)))
    assert num == pytest.approx(tv_scale_normal(1.0, 2.0), abs=1e-8)
    with pytest.raises(ValueError):
        tv_scale_normal(0.0, 1.0)
    with pytest.raises(ValueError):
        tv_scale_normal(1.0, -2.0)


def test_tv_scale_normal_random_pairs():
    gen = np.random.default_rng(7)
    a = np.exp(gen.uniform(-5, 5, 1000))
    b = np.exp(gen.uniform(-5, 5, 1000))
    for x, y in zip(a, b):
        v = tv_scale_normal(x, y)
        assert 0 <= v <= abs(x - y) / max(x, y) + 1e-15


@pytest.mark.parametrize("pair", [((0, 1), (0.3, 2)), ((1, 1), (-1, 0.5)), ((0, 1), (5, 3))])
def test_tv_forms_agree(pair):
    (m1, s1), (m2, s2) = pair
    p, q = normal_density(m1, s1), normal_density(m2, s2)
    v = tv_from_densities(p, q, agreement=1e-8)
    assert 0 <= v <= 1


def test_tv_gamma_densities():
    # Gamma laws differing in scale; closed form from the CDF at the crossing.
    k, r1, r2 = 3.0, 1.0, 2.0
    p = DensitySpec(lambda z: stats.gamma.pdf(z, k, scale=1 / r1), (0.0, math.inf),
                    center=3.0, scale=2.0)
    q = DensitySpec(lambda z: stats.gamma.pdf(z, k, scale=1 / r2), (0.0, math.inf),
                    center=1.5, scale=1.0)
    c = k * math.log(r2 / r1) / (r2 - r1)
    exact = special.gammainc(k, r2 * c) - special.gammainc(k, r1 * c)
    assert tv_from_densities(p, q) == pytest.approx(exact, abs=1e-8)


# --- smoothed TV -------------------------------------------------------------

def test_smoothed_identical():
    x = np.random.default_rng(0).normal(size=1000)
    assert tv_empirical_smoothed(x, x, n_boot=5).value == pytest.approx(0, abs=1e-12)


def test_smoothed_disjoint():
    gen = np.random.default_rng(0)
    a, b = gen.uniform(0, 1, 2000), gen.uniform(100, 101, 2000)
    est = tv_empirical_smoothed(a, b, bandwidth=0.05, n_boot=0)
    assert est.value == pytest.approx(1.0, abs=1e-3)
    assert est.diagnostic and est.kind == "tv"


def test_smoothed_errors():
    with pytest.raises(ValueError):
        tv_empirical_smoothed([1.0], [2.0], bandwidth=0.0)
    with pytest.raises(ValueError):
        tv_empirical_smoothed([], [2.0], bandwidth=0.1)


def test_smoothed_normal_shift():
    gen = np.random.default_rng(5)
    a, b = gen.normal(size=50_000), gen.normal(1.0, size=50_000)
    est = tv_empirical_smoothed(a, b, rng=RngStream(1))
    assert abs(est.value - tv_normal_shift(1.0)) < 0.02


def test_silverman_positive():
    assert silverman_bandwidth(np.ones(10)) > 0
    assert silverman_bandwidth(np.random.default_rng(0).normal(size=1000)) == pytest.approx(
        0.9 * 1000 ** -0.2, rel=0.1)


@pytest.mark.slow
def test_smoothed_tv_gibbs_k0_case_b_below_bound():
    m = reference_case("B", 0)
    sysm = gibbs_system(m)
    x = simulate_forward(sysm, 1.0, 10, RngStream(20080701).child(1), replicas=100_000)
    pi = sample_stationary(sysm, "exact", 100_000, RngStream(20080701).child(2)).values
    est = tv_empirical_smoothed(x, pi, support=(0.0, float(max(x.max(), pi.max()) * 1.2)),
                                rng=RngStream(3))
    bound = tv_bound(m, default_wasserstein_bound(m).published())(10)
    assert est.value <= bound + 3 * est.std_error


@pytest.mark.slow
def test_w1_below_smoothed_tv_on_logistic():
    sysm = logistic_system(LogisticModel(2.0))
    for n in (1, 3, 10):
        x = simulate_forward(sysm, 0.3, n, RngStream(4).child(n), replicas=20_000)
        pi = sample_stationary(sysm, "exact", 20_000, RngStream(5).child(n)).values
        w = wasserstein1_empirical(x, pi, n_boot=0).value
        tv = tv_empirical_smoothed(x, pi, support=(0.0, 1.0), n_boot=0)
        assert w <= tv.value + 2 * tv.bandwidth


# --- W -> TV constant ----------------------------------------------------------

def test_conversion_constant_forms_agree_at_unit_eps0():
    for B, q in [(2.0, 1.0), (5.0, 2.0), (0.3, 0.75), (20.0, 3.0)]:
        assert wasserstein_to_tv_constant(B, q, 1.0, "proof") == pytest.approx(
            wasserstein_to_tv_constant(B, q, 1.0, "printed"), rel=1e-12)
    assert wasserstein_to_tv_constant(2.0, 1.0, 0.05, "proof") != pytest.approx(
        wasserstein_to_tv_constant(2.0, 1.0, 0.05, "printed"))
    with pytest.raises(ValueError):
        wasserstein_to_tv_constant(-1, 1, 1)
    with pytest.raises(ValueError):
        wasserstein_to_tv_constant(1, 1, 1, "other")
