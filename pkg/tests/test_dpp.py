"""Samplers: determinism, projection-rank invariants, exact count laws."""
import math

import numpy as np
import pytest

from edgestats import (CountDistribution, DomainError, PointConfiguration,
                       empirical_rho1, fermi_hermite_kernel, gumbel_cdf,
                       ks_statistic, poisson_binomial, sample_grand_canonical,
                       sample_poisson_exp, sample_shifted_airy_max,
                       tv_distance, von_koch_check)

SMALL_SPEC = fermi_hermite_kernel(math.exp(-0.5), math.exp(3.0))


def test_point_configuration_invariants():
    cfg = PointConfiguration(points=(1.0, 2.0, 3.5), seed=1)
    assert len(cfg) == 3
    assert cfg.as_array().dtype == float
    with pytest.raises(DomainError):
        PointConfiguration(points=(2.0, 1.0), seed=1)
    with pytest.raises(DomainError):
        PointConfiguration(points=(0.0, np.nan), seed=1)


def test_count_distribution_validation_and_tv():
    with pytest.raises(DomainError):
        CountDistribution(np.array([0.5, 0.6]))
    d1 = CountDistribution.from_bernoulli([0.5, 0.5])
    assert np.allclose(d1.probabilities, [0.25, 0.5, 0.25])
    d2 = CountDistribution.from_counts([0, 1, 1, 2])
    assert d2.mean() == pytest.approx(1.0)
    assert d1.tv(d2) == pytest.approx(
        tv_distance(d1.probabilities, d2.probabilities))


def test_grand_canonical_seed_determinism():
    a = sample_grand_canonical(SMALL_SPEC, seed=42)
    b = sample_grand_canonical(SMALL_SPEC, seed=42)
    c = sample_grand_canonical(SMALL_SPEC, seed=43)
    assert a.points == b.points
    assert a.meta["indices"] == b.meta["indices"]
    assert a.points != c.points


def test_grand_canonical_point_count_equals_selected_rank():
    # stage one picks a finite rank; the projection stage must place
    # exactly that many points
    for seed in range(30):
        cfg = sample_grand_canonical(SMALL_SPEC, seed=seed)
        assert len(cfg) == len(cfg.meta["indices"])


def test_grand_canonical_count_law_matches_occupation_bernoullis():
    n_samples = 2000
    counts = [len(sample_grand_canonical(SMALL_SPEC, seed=10_000 + i))
              for i in range(n_samples)]
    got = CountDistribution.from_counts(counts)
    want = CountDistribution.from_bernoulli(SMALL_SPEC.weights)
    assert got.tv(want) < 0.06
    assert got.mean() == pytest.approx(want.mean(), abs=0.2)


def test_poisson_exp_maximum_follows_gumbel_exactly():
    # intensity e^{-t} on (t_min, inf): P[max <= t] = exp(-e^{-t})
    t_min = -2.0
    maxima = []
    for i in range(4000):
        cfg = sample_poisson_exp(t_min, seed=50_000 + i)
        maxima.append(max(cfg.points) if len(cfg) else t_min - 10.0)
    assert ks_statistic(maxima, gumbel_cdf) < 0.03


def test_poisson_exp_total_count_is_poisson():
    t_min = -1.0
    lam = math.exp(1.0)
    counts = [len(sample_poisson_exp(t_min, seed=90_000 + i)) for i in range(4000)]
    got = CountDistribution.from_counts(counts)
    kmax = max(counts) + 1
    pois = np.array([math.exp(-lam) * lam ** k / math.factorial(k)
                     for k in range(kmax)])
    assert tv_distance(got.probabilities, pois) < 0.05


def test_poisson_exp_determinism():
    a = sample_poisson_exp(0.0, seed=3)
    b = sample_poisson_exp(0.0, seed=3)
    assert a.points == b.points


def test_empirical_rho1_covers_exact_poisson_intensity():
    configs = [sample_poisson_exp(-2.0, seed=70_000 + i) for i in range(1000)]
    bins = np.linspace(-2.0, 2.0, 13)
    est = empirical_rho1(configs, bins)
    cov = est.coverage(lambda t: np.exp(-np.asarray(t)), n_sigma=3.0)
    assert cov >= 0.9
    assert est.n_samples == 1000
    assert est.centers().size == 12


def test_empirical_rho1_validation():
    cfgs = [sample_poisson_exp(0.0, seed=i) for i in range(100)]
    with pytest.raises(DomainError):
        empirical_rho1([], [0.0, 1.0])
    with pytest.raises(DomainError):
        empirical_rho1(cfgs[:50], [0.0, 1.0])
    with pytest.raises(DomainError):
        empirical_rho1(cfgs, [1.0, 0.0])


def test_shifted_airy_max_determinism_and_validation():
    approx = {"gue_n": 120, "top_k": 5}
    a = sample_shifted_airy_max(1.0, approx, seed=11)
    b = sample_shifted_airy_max(1.0, approx, seed=11)
    assert a == b and math.isfinite(a)
    with pytest.raises(DomainError):
        sample_shifted_airy_max(1.0, {"gue_n": 50, "top_k": 5}, seed=1)
    with pytest.raises(DomainError):
        sample_shifted_airy_max(1.0, {"gue_n": 120, "top_k": 0}, seed=1)
    with pytest.raises(DomainError):
        sample_shifted_airy_max(1.0, {"gue_n": 120, "top_k": 30}, seed=1)
    with pytest.raises(DomainError):
        sample_shifted_airy_max(-1.0, approx, seed=1)


def test_von_koch_check_finite_identity():
    rng = np.random.Generator(np.random.PCG64(5))
    w = 1.0 / (1.0 + np.exp(np.arange(20) + 0.5))
    v = 0.7 ** (np.arange(20) + 1.0)
    a = -np.diag(w)
    b = np.outer(v, v)
    assert von_koch_check(a, b)
    assert von_koch_check(np.zeros((4, 4)), np.zeros((4, 4)))
    dense = 0.05 * rng.standard_normal((8, 8))
    assert von_koch_check(dense, dense.T)
    with pytest.raises(DomainError):
        von_koch_check(np.zeros((3, 3)), np.zeros((4, 4)))
    with pytest.raises(DomainError):
        von_koch_check(np.zeros(3), np.zeros(3))
