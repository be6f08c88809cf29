import math

import numpy as np
import pytest

from bg_core import BGParams
from bounds import gstar_bracket
from chaos import ChaosKernel, Spectrum, bg_matching_spectrum, chaos_cumulants, sample_chaos, spectrum
from errors import OrderOutOfRange
from gamma_ops import (cross_moment_g_gamma, cross_moment_gamma_gamma, expected_gamma, gamma_gamma_moment, gamma_path,
                       gamma_paths, gamma_pathwise, gstar_l2, gstar_residual_paths)
from mc import batch_means


def test_gamma_two_on_a_single_path():
    spec = Spectrum.from_values([1.0])
    assert gamma_pathwise(spec, [2.0], 2) == pytest.approx(8.0)
    assert gamma_pathwise(spec, [2.0], 1) == pytest.approx(3.0)


def test_gamma_path_collects_orders():
    spec = Spectrum.from_values([0.5, -0.5])
    path = gamma_path(spec, [1.0, 1.0])
    # z_j^2 = 1 kills the fluctuation, leaving kappa_m / (m-1)!
    assert path.value(1) == 0.0
    assert path.value(2) == pytest.approx(1.0)
    assert path.value(3) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(OrderOutOfRange):
        path.value(4)


def test_first_gamma_path_is_the_sample_itself():
    spec = Spectrum.from_values([0.8, -0.4, 0.3])
    samples, z = sample_chaos(spec, 2000, seed=21)
    assert np.array_equal(gamma_paths(spec, z)[:, 0], samples)


def test_gamma_paths_match_single_paths():
    spec = Spectrum.from_values([0.8, -0.4, 0.3])
    z = np.random.default_rng(2).standard_normal((5, 3))
    rows = gamma_paths(spec, z)
    for i in range(5):
        for m in range(1, 4):
            assert rows[i, m - 1] == pytest.approx(gamma_pathwise(spec, z[i], m), rel=1e-13)


def test_expected_gamma_of_diagonal_kernel(diag_kernel):
    assert expected_gamma(diag_kernel, 1) == 0.0
    assert expected_gamma(diag_kernel, 2) == pytest.approx(4.0)
    assert expected_gamma(diag_kernel, 4) == pytest.approx(16.0)


def test_cross_moments_of_diagonal_kernel(diag_kernel):
    assert cross_moment_g_gamma(diag_kernel, 3) == pytest.approx(16.0)
    assert cross_moment_g_gamma(diag_kernel, 2) == pytest.approx(0.0, abs=1e-12)
    assert cross_moment_gamma_gamma(diag_kernel, 2, 2) == pytest.approx(32.0)
    assert cross_moment_gamma_gamma(diag_kernel, 1, 3) == pytest.approx(cross_moment_g_gamma(diag_kernel, 3))


def test_cross_moment_order_limits(diag_kernel):
    with pytest.raises(OrderOutOfRange):
        cross_moment_gamma_gamma(diag_kernel, 3, 4)
    with pytest.raises(OrderOutOfRange):
        cross_moment_g_gamma(diag_kernel, 6)
    with pytest.raises(OrderOutOfRange):
        expected_gamma(diag_kernel, 0)


def test_gstar_l2_of_zero_kernel(laplace2):
    assert gstar_l2(ChaosKernel.zeros(3), laplace2) == 0.0


def test_gstar_l2_vanishes_at_the_matching_spectrum(laplace2):
    spec = bg_matching_spectrum(laplace2)
    assert gstar_l2(spec.to_kernel(), laplace2) == pytest.approx(0.0, abs=1e-12)
    z = np.random.default_rng(0).standard_normal((100, spec.dim))
    assert np.allclose(gstar_residual_paths(spec, z, laplace2), 0.0, atol=1e-12)


@pytest.mark.parametrize("params", [BGParams(2, 1, 2, 1), BGParams(2, 1, 3, 1), BGParams(4, 2, 2.5, 0.5)])
def test_gstar_l2_equals_the_cumulant_bracket(small_kernel, params):
    cum = chaos_cumulants(small_kernel)
    expected = gstar_bracket(cum, params.alpha1, params.alpha2)
    assert gstar_l2(small_kernel, params) == pytest.approx(expected, rel=1e-10, abs=1e-14)


def test_gamma_gamma_moment_formula(small_kernel):
    cum = chaos_cumulants(small_kernel)
    assert gamma_gamma_moment(cum, 2, 3) == pytest.approx(
        cum.k(5) / math.factorial(4) + cum.k(2) * cum.k(3) / 2.0, rel=1e-14)


def test_mean_of_gamma_two_is_the_variance():
    spec = Spectrum.from_values([0.6, -0.3, 0.2])
    _, z = sample_chaos(spec, 200_000, seed=4)
    report = batch_means(gamma_paths(spec, z)[:, 1], 32)
    expected = expected_gamma(spec.to_kernel(), 2)
    assert abs(report.estimate - expected) <= 5 * report.se


@pytest.mark.slow
def test_pathwise_second_moments_match_closed_forms():
    params = BGParams(2, 1, 3, 1)
    spec = spectrum(ChaosKernel(np.array([[0.4, 0.1, 0.0], [0.1, -0.3, 0.05], [0.0, 0.05, 0.2]])))
    _, z = sample_chaos(spec, 2_000_000, seed=17)
    gammas = gamma_paths(spec, z)
    kernel = spec.to_kernel()
    for m, p in ((1, 2), (2, 2), (2, 3), (3, 3)):
        report = batch_means(gammas[:, m - 1] * gammas[:, p - 1], 64)
        assert abs(report.estimate - cross_moment_gamma_gamma(kernel, m, p)) <= 5 * report.se
    report = batch_means(gstar_residual_paths(spec, z, params) ** 2, 64)
    assert abs(report.estimate - gstar_l2(kernel, params)) <= 5 * report.se
