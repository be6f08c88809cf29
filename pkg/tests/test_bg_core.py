import math

import numpy as np
import pytest
from scipy import integrate

from bg_core import (GENERAL, LAPLACE, SVG, VG, BGParams, CumulantVector, bound_constants, char_fn, convolve,
                     cumulant, cumulants, gamma_cumulant, levy_exponent, levy_signed_weight, log_char_fn,
                     moment, normal_limit_params, sample, scale, validate)
from errors import BoundInapplicable, ConfigInvalid, DomainError, NonPositiveParameter, OrderOutOfRange
from mc import MCConfig, sample_cumulants


def random_params(seed, count, low=1.5, high=4.0):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        a1, a2 = rng.uniform(low, high, size=2)
        p1, p2 = rng.uniform(0.5, 3.0, size=2)
        out.append(BGParams(a1, p1, a2, p2))
    return out


@pytest.mark.parametrize("params,expected", [
    (BGParams(2, 3, 4, 5), GENERAL),
    (BGParams(2, 3, 4, 3), VG),
    (BGParams(2, 5, 2, 5), SVG),
    (BGParams(3, 1, 3, 1), LAPLACE),
])
def test_validate_classifies_nested_families(params, expected):
    assert validate(params) == expected


def test_validate_accepts_plain_tuples():
    assert validate((3.0, 1.0, 3.0, 1.0)) == LAPLACE


@pytest.mark.parametrize("values", [(0, 1, 2, 1), (2, -1, 2, 1), (2, 1, float('nan'), 1)])
def test_non_positive_parameters_are_rejected(values):
    with pytest.raises(NonPositiveParameter):
        BGParams(*values)


def test_from_string_parses_command_line_form():
    assert BGParams.from_string('2, 1, 2, 1') == BGParams(2.0, 1.0, 2.0, 1.0)
    with pytest.raises(ConfigInvalid):
        BGParams.from_string('2,1')
    with pytest.raises(ConfigInvalid):
        BGParams.from_string('2,a,2,1')


def test_char_fn_at_zero_is_one(general_params):
    assert char_fn(general_params, 0.0) == pytest.approx(1.0 + 0.0j, abs=1e-15)


def test_char_fn_symmetric_is_real():
    params = BGParams.svg(1.7, 2.5)
    z = np.linspace(-6, 6, 25)
    values = char_fn(params, z)
    assert np.allclose(values.imag, 0.0, atol=1e-14)
    assert np.allclose(values.real, (1.7 ** 2 / (1.7 ** 2 + z ** 2)) ** 2.5, rtol=1e-12)


def test_char_fn_laplace_value(laplace2):
    assert char_fn(laplace2, 2.0) == pytest.approx(0.5, abs=1e-14)


@pytest.mark.parametrize("params", [BGParams(8, 1.5, 10, 0.7), BGParams(12, 2.0, 8, 3.0), BGParams(10, 1, 10, 1)])
def test_char_fn_matches_levy_khintchine_quadrature(params):
    z = np.linspace(-10, 10, 41)
    expected = char_fn(params, z)
    via_levy = np.exp(levy_exponent(params, z, n_nodes=128))
    assert np.allclose(via_levy, expected, rtol=1e-6, atol=0.0)


def test_levy_weight_values(laplace2):
    unit = BGParams(1, 1, 1, 1)
    assert levy_signed_weight(unit, 1.0) == pytest.approx(math.exp(-1.0), rel=1e-14)
    assert levy_signed_weight(laplace2, 0.7) == pytest.approx(levy_signed_weight(laplace2, -0.7), rel=1e-14)
    assert levy_signed_weight(laplace2, 0.7, tilted=True) == pytest.approx(
        -levy_signed_weight(laplace2, -0.7, tilted=True), rel=1e-14)
    with pytest.raises(DomainError):
        levy_signed_weight(laplace2, 0.0)


def test_tilted_levy_weight_integrates_to_mean(general_params):
    positive, _ = integrate.quad(lambda u: levy_signed_weight(general_params, u, tilted=True), 0, np.inf)
    negative, _ = integrate.quad(lambda u: levy_signed_weight(general_params, u, tilted=True), -np.inf, 0)
    assert positive + negative == pytest.approx(general_params.mean, rel=1e-9)


def test_cumulant_examples(general_params):
    assert cumulant(general_params, 2) == pytest.approx(1.0625, rel=1e-14)
    assert cumulant(BGParams(1, 1, 1, 1), 4) == pytest.approx(12.0, rel=1e-14)
    assert cumulant(general_params, 1) == pytest.approx(0.25, rel=1e-14)
    for j in (1, 3, 5):
        assert cumulant(BGParams.svg(1.3, 2.2), j) == 0.0
    with pytest.raises(OrderOutOfRange):
        cumulant(general_params, 7)


def test_laplace2_cumulant_vector(laplace2):
    assert cumulants(laplace2).kappa == pytest.approx((0.0, 0.5, 0.0, 0.75, 0.0, 3.75), abs=1e-15)


def test_unit_laplace_even_cumulants():
    cum = cumulants(BGParams(1, 1, 1, 1))
    assert (cum.k(2), cum.k(4), cum.k(6)) == pytest.approx((2.0, 12.0, 240.0))


@pytest.mark.parametrize("params", [BGParams(2, 3, 4, 5), BGParams(3, 0.7, 1.5, 2.0)])
def test_cumulants_are_derivatives_of_log_char_fn(params):
    r = 0.5 * min(params.alpha1, params.alpha2)
    real = np.polynomial.chebyshev.Chebyshev.interpolate(lambda z: log_char_fn(params, z).real, 30, domain=[-r, r])
    imag = np.polynomial.chebyshev.Chebyshev.interpolate(lambda z: log_char_fn(params, z).imag, 30, domain=[-r, r])
    for j in range(1, 5):
        derivative = real.deriv(j)(0.0) + 1j * imag.deriv(j)(0.0)
        kappa = ((-1j) ** j * derivative).real
        assert kappa == pytest.approx(cumulant(params, j), rel=1e-4)


def test_moment_identities(general_params):
    svg = BGParams.svg(1.5, 2.0)
    assert moment(svg, 1) == pytest.approx(0.0, abs=1e-14)
    assert moment(svg, 2) == pytest.approx(2 * 2.0 / 1.5 ** 2, rel=1e-12)
    variance = moment(general_params, 2) - moment(general_params, 1) ** 2
    assert variance == pytest.approx(cumulant(general_params, 2), rel=1e-12)


def test_moment_four_from_cumulants(general_params):
    k = [cumulant(general_params, j) for j in range(1, 5)]
    expected = k[3] + 4 * k[2] * k[0] + 3 * k[1] ** 2 + 6 * k[1] * k[0] ** 2 + k[0] ** 4
    assert moment(general_params, 4) == pytest.approx(expected, rel=1e-12)


def test_sample_mean_matches(general_params):
    draws = sample(general_params, 1_000_000, seed=3)
    se = draws.std(ddof=1) / math.sqrt(draws.size)
    assert abs(draws.mean() - 0.25) <= 4 * se


def test_sample_is_deterministic(general_params):
    assert np.array_equal(sample(general_params, 1000, seed=11), sample(general_params, 1000, seed=11))
    assert not np.array_equal(sample(general_params, 1000, seed=11), sample(general_params, 1000, seed=12))


def test_sample_convolution_matches_moments():
    first = BGParams(2.0, 1.0, 3.0, 2.0)
    second = BGParams(2.0, 0.5, 3.0, 1.5)
    total = convolve(first, second)
    draws = sample(first, 400_000, seed=1) + sample(second, 400_000, seed=2)
    se_mean = draws.std(ddof=1) / math.sqrt(draws.size)
    assert abs(draws.mean() - total.mean) <= 5 * se_mean
    centered = (draws - draws.mean()) ** 2
    se_var = centered.std(ddof=1) / math.sqrt(draws.size)
    assert abs(centered.mean() - total.variance) <= 5 * se_var


@pytest.mark.slow
def test_sample_cumulants_of_draws():
    params = BGParams(1, 1, 1, 1)
    draws = sample(params, 10_000_000, seed=5)
    estimated = sample_cumulants(draws, 4, MCConfig(n_samples=draws.size, seed=5))
    for j in range(1, 5):
        assert abs(estimated.k(j) - cumulant(params, j)) <= 5 * estimated.standard_error(j)


@pytest.mark.parametrize("params,alpha12,alpha13", [
    (BGParams(2, 1, 2, 1), 4.0 / 3.0, 0.0),
    (BGParams(2, 1, 3, 1), 1.5, 1.0 / 6.0),
])
def test_bound_constants(params, alpha12, alpha13):
    constants = bound_constants(params)
    assert constants.alpha12 == pytest.approx(alpha12, rel=1e-14)
    assert constants.alpha13 == pytest.approx(alpha13, abs=1e-15)


def test_bound_constants_boundary():
    with pytest.raises(BoundInapplicable):
        bound_constants(BGParams(1, 1, 1, 1))


def test_normal_limit_along_shapes():
    sigma2 = 2.0
    fourth = []
    for p in (1.0, 10.0, 100.0):
        params = normal_limit_params(sigma2, p)
        assert cumulant(params, 2) == pytest.approx(sigma2, rel=1e-12)
        fourth.append(cumulant(params, 4))
    assert fourth[0] > fourth[1] > fourth[2] > 0


def test_scale_and_convolve(general_params):
    scaled = scale(general_params, 2.5)
    for j in range(1, 7):
        assert cumulant(scaled, j) == pytest.approx(2.5 ** j * cumulant(general_params, j), rel=1e-12)
    other = BGParams(2.0, 0.5, 4.0, 1.5)
    summed = convolve(general_params, other)
    for j in range(1, 7):
        assert cumulant(summed, j) == pytest.approx(cumulant(general_params, j) + cumulant(other, j), rel=1e-12)
    with pytest.raises(DomainError):
        convolve(general_params, BGParams(3.0, 1.0, 4.0, 1.0))
    with pytest.raises(NonPositiveParameter):
        scale(general_params, 0.0)


def test_gamma_cumulant_builds_bg_cumulants(general_params):
    for j in range(1, 7):
        expected = gamma_cumulant(2.0, 3.0, j) + (-1) ** j * gamma_cumulant(4.0, 5.0, j)
        assert cumulant(general_params, j) == pytest.approx(expected, rel=1e-14)


def test_cumulant_vector_checks():
    partial = CumulantVector.from_sequence([0.5, 0.0], first_order=2)
    assert partial.k(2) == 0.5
    with pytest.raises(OrderOutOfRange):
        partial.require(range(2, 7))
    with pytest.raises(DomainError):
        CumulantVector((0.0, -1.0, 0.0, 0.0, 0.0, 0.0))


@pytest.mark.parametrize("params", random_params(2024, 5))
def test_cumulants_of_random_params_are_finite(params):
    cum = cumulants(params)
    assert all(np.isfinite(cum.kappa))
    assert cum.k(2) == pytest.approx(params.variance, rel=1e-12)
