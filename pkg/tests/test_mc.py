import math

import numpy as np
import pytest

from bg_core import BGParams, sample
from errors import ConfigInvalid, EmptyDictionary, EmptyInput, OrderOutOfRange, TooFewSamples
from mc import (EstimatorReport, MCConfig, batch_means, gauss_laguerre, sample_cumulants, smooth_w3_lower_bound,
                wasserstein1_empirical)
from stein import w3_dictionary


def test_mc_config_invariants():
    cfg = MCConfig(n_samples=3200, seed=1, n_batches=32)
    assert cfg.to_dict() == {'n_samples': 3200, 'seed': 1, 'n_batches': 32}
    with pytest.raises(ConfigInvalid):
        MCConfig(n_samples=3201, seed=1, n_batches=32)
    with pytest.raises(ConfigInvalid):
        MCConfig(n_samples=700, seed=1, n_batches=7)


def test_mc_config_from_config_file_defaults():
    cfg = MCConfig.from_config(seed=5)
    assert cfg.seed == 5
    assert cfg.n_samples == 1_000_000
    assert cfg.n_batches == 32


def test_mc_config_reads_environment(monkeypatch):
    monkeypatch.setenv('BG_SEED', '99')
    assert MCConfig.from_config().seed == 99


def test_estimator_report_rejects_negative_se():
    with pytest.raises(ConfigInvalid):
        EstimatorReport(estimate=0.0, se=-1.0, n=10)


def test_constant_samples_have_zero_cumulants():
    estimated = sample_cumulants(np.full(6000, 3.0), 6, MCConfig(n_samples=6000, seed=0, n_batches=8))
    assert estimated.k(1) == 3.0
    for j in range(2, 7):
        assert estimated.k(j) == 0.0
    assert estimated.source == 'mc'


def test_sample_cumulants_needs_enough_samples():
    with pytest.raises(TooFewSamples):
        sample_cumulants(np.zeros(5999), 6)
    with pytest.raises(OrderOutOfRange):
        sample_cumulants(np.zeros(10_000), 7)


@pytest.mark.slow
def test_normal_sample_cumulants():
    draws = np.random.default_rng(1).standard_normal(10_000_000)
    estimated = sample_cumulants(draws, 4, MCConfig(n_samples=draws.size, seed=1))
    assert abs(estimated.k(2) - 1.0) <= 5 * estimated.standard_error(2)
    assert abs(estimated.k(3)) <= 5 * estimated.standard_error(3)
    assert abs(estimated.k(4)) <= 5 * estimated.standard_error(4)


@pytest.mark.slow
def test_unit_laplace_fourth_cumulant():
    draws = sample(BGParams(1, 1, 1, 1), 10_000_000, seed=2)
    estimated = sample_cumulants(draws, 4, MCConfig(n_samples=draws.size, seed=2))
    assert abs(estimated.k(4) - 12.0) <= 5 * estimated.standard_error(4)


def test_standard_error_scales_with_root_n():
    rng = np.random.default_rng(8)
    small = sample_cumulants(rng.standard_normal(256_000), 2, MCConfig(n_samples=256_000, seed=8, n_batches=2048))
    large = sample_cumulants(rng.standard_normal(1_024_000), 2, MCConfig(n_samples=1_024_000, seed=8, n_batches=2048))
    ratio = small.standard_error(2) / large.standard_error(2)
    assert 1.8 <= ratio <= 2.2


def test_sample_cumulants_are_deterministic():
    draws = np.random.default_rng(4).exponential(size=64_000)
    cfg = MCConfig(n_samples=64_000, seed=4)
    first = sample_cumulants(draws, 6, cfg)
    second = sample_cumulants(draws.copy(), 6, cfg)
    assert first.kappa == second.kappa
    assert first.se == second.se


def test_batch_means():
    values = np.arange(64, dtype=float)
    report = batch_means(values, 8)
    assert report.estimate == pytest.approx(31.5)
    batch = np.arange(8) * 8 + 3.5
    assert report.se == pytest.approx(np.std(batch, ddof=1) / math.sqrt(8))
    with pytest.raises(EmptyInput):
        batch_means([], 8)
    with pytest.raises(TooFewSamples):
        batch_means([1.0, 2.0], 8)


def test_wasserstein_examples():
    a = np.random.default_rng(3).normal(size=1000)
    assert wasserstein1_empirical(a, a) == 0.0
    assert wasserstein1_empirical(a, a + 2.5) == pytest.approx(2.5, rel=1e-12)
    assert wasserstein1_empirical([0.0, 1.0], [0.0, 2.0]) == pytest.approx(0.5)
    assert wasserstein1_empirical([0.0, 1.0], [2.0, 0.0]) == pytest.approx(0.5)
    with pytest.raises(EmptyInput):
        wasserstein1_empirical([], [1.0])


def test_wasserstein_unequal_sizes():
    assert wasserstein1_empirical([0.0, 1.0], [0.5]) == pytest.approx(0.5)


def test_dictionary_lower_bound_for_equal_laws():
    a = np.random.default_rng(6).normal(size=200_000)
    report = smooth_w3_lower_bound(a, a, w3_dictionary())
    assert report.estimate == 0.0
    b = np.random.default_rng(7).normal(size=200_000)
    report = smooth_w3_lower_bound(a, b, w3_dictionary())
    assert report.estimate <= 5 * report.se


def test_dictionary_lower_bound_below_w1():
    rng = np.random.default_rng(9)
    a = rng.normal(size=100_000)
    b = rng.laplace(scale=0.8, size=100_000) + 0.1
    report = smooth_w3_lower_bound(a, b, w3_dictionary())
    assert report.estimate <= wasserstein1_empirical(a, b) + 5 * report.se


@pytest.mark.slow
def test_dictionary_separates_distant_laws():
    rng = np.random.default_rng(10)
    a = rng.normal(size=1_000_000)
    b = rng.normal(size=1_000_000) + 10.0
    report = smooth_w3_lower_bound(a, b, w3_dictionary())
    assert report.estimate > 0.5
    assert report.details['argmax']


def test_empty_dictionary():
    with pytest.raises(EmptyDictionary):
        smooth_w3_lower_bound([0.0, 1.0], [0.0, 1.0], [])


def test_gauss_laguerre_examples():
    nodes, weights = gauss_laguerre(1)
    assert nodes == pytest.approx([1.0])
    assert weights == pytest.approx([1.0])
    nodes, weights = gauss_laguerre(2)
    assert sorted(nodes) == pytest.approx([2 - math.sqrt(2), 2 + math.sqrt(2)], rel=1e-12)
    order = np.argsort(nodes)
    assert weights[order] == pytest.approx([(2 + math.sqrt(2)) / 4, (2 - math.sqrt(2)) / 4], rel=1e-12)
    assert np.sum(weights * nodes ** 3) == pytest.approx(6.0, rel=1e-12)


@pytest.mark.parametrize("n,degrees", [(4, (0, 4, 7)), (16, (0, 16, 31)), (64, (0, 10, 20))])
def test_gauss_laguerre_polynomial_exactness(n, degrees):
    nodes, weights = gauss_laguerre(n)
    for degree in degrees:
        exact = math.factorial(degree)
        assert np.sum(weights * nodes ** degree) == pytest.approx(exact, rel=1e-10)


def test_gauss_laguerre_range():
    with pytest.raises(OrderOutOfRange):
        gauss_laguerre(0)
    with pytest.raises(OrderOutOfRange):
        gauss_laguerre(257)
