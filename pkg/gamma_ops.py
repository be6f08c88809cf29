#!/usr/bin/env python3
"""
Gamma-operators of a second-chaos element

For G = sum_j lambda_j (Z_j^2 - 1) the operators have the pathwise form

    Gamma_m(G) = 2^{m-1} sum_j lambda_j^m (Z_j^2 - 1) + kappa_m(G) / (m-1)!

so E Gamma_m = kappa_m / (m-1)! and the mixed moments used by the d3 bounds
are exact polynomials in the cumulants:

    E[G Gamma_m]          = kappa_{m+1} / m!
    E[Gamma_m Gamma_p]    = kappa_{m+p} / (m+p-1)! + kappa_m kappa_p / ((m-1)! (p-1)!)
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from bg_core import BGParams, bound_constants
from chaos import Spectrum, chaos_cumulants, spectrum_cumulant, weighted_fluctuation
from bg_utils import get_tolerances
from errors import NegativeRadicand, OrderOutOfRange

logger = logging.getLogger(__name__)

MAX_PATHWISE_ORDER = 3


def _check_order(m, low, high, what):
    if not isinstance(m, (int, np.integer)) or not low <= m <= high:
        raise OrderOutOfRange(f"{what} must be an integer in {low}..{high}, got {m}")


@dataclass(frozen=True, eq=False)
class GammaPath:
    spectrum: Spectrum
    z: np.ndarray
    gamma: tuple

    def value(self, m):
        _check_order(m, 1, MAX_PATHWISE_ORDER, "Gamma order")
        return self.gamma[m - 1]


def _gamma_rows(spec, z, m):
    weights = spec.lambdas ** m
    return 2 ** (m - 1) * weighted_fluctuation(weights, z) + spectrum_cumulant(spec, m) / math.factorial(m - 1)


def gamma_pathwise(spec: Spectrum, z, m):
    """Gamma_m(G) on one Gaussian path z (length N)"""
    _check_order(m, 1, MAX_PATHWISE_ORDER, "pathwise Gamma order")
    return float(_gamma_rows(spec, np.asarray(z, dtype=float)[None, :], m)[0])


def gamma_path(spec: Spectrum, z):
    z = np.asarray(z, dtype=float)
    values = tuple(gamma_pathwise(spec, z, m) for m in range(1, MAX_PATHWISE_ORDER + 1))
    return GammaPath(spectrum=spec, z=z, gamma=values)


def gamma_paths(spec: Spectrum, z):
    """Gamma_1..Gamma_3 for every row of z, shape (n, 3)"""
    z = np.atleast_2d(np.asarray(z, dtype=float))
    return np.column_stack([_gamma_rows(spec, z, m) for m in range(1, MAX_PATHWISE_ORDER + 1)])


def _kappa(cum, j):
    return 0.0 if j == 1 else cum.k(j)


def expected_gamma(kernel, m):
    """E Gamma_m(G) = kappa_m / (m-1)!"""
    _check_order(m, 1, 6, "Gamma order")
    return _kappa(chaos_cumulants(kernel), m) / math.factorial(m - 1)


def cross_moment_g_gamma(kernel, m):
    """E[G Gamma_m(G)] = kappa_{m+1} / m!"""
    _check_order(m, 1, 5, "Gamma order")
    return chaos_cumulants(kernel).k(m + 1) / math.factorial(m)


def gamma_gamma_moment(cum, m, p):
    """E[Gamma_m Gamma_p] from a cumulant vector (kappa_1 taken as 0)"""
    return (cum.k(m + p) / math.factorial(m + p - 1)
            + _kappa(cum, m) * _kappa(cum, p) / (math.factorial(m - 1) * math.factorial(p - 1)))


def cross_moment_gamma_gamma(kernel, m, p):
    """E[Gamma_m(G) Gamma_p(G)] for m, p >= 1 and m + p <= 6"""
    _check_order(m, 1, 5, "Gamma order m")
    _check_order(p, 1, 5, "Gamma order p")
    if m + p > 6:
        raise OrderOutOfRange(f"m + p must not exceed 6, got {m + p}")
    return gamma_gamma_moment(chaos_cumulants(kernel), m, p)


def gstar_l2(kernel, params: BGParams):
    """
    E[(G/(a1 a2) + alpha13 Gamma_2(G) - Gamma_3(G))^2] from the mixed Gamma moments.

    The square expands into E G^2, E Gamma_2^2, E Gamma_3^2 and the three cross
    terms, each an exact cumulant polynomial.
    """
    constants = bound_constants(params)
    a = 1.0 / (params.alpha1 * params.alpha2)
    b = constants.alpha13
    cum = chaos_cumulants(kernel)

    e_gg = cum.k(2)
    e_g2 = cum.k(3) / 2.0
    e_g3 = cum.k(4) / 6.0
    e_22 = gamma_gamma_moment(cum, 2, 2)
    e_23 = gamma_gamma_moment(cum, 2, 3)
    e_33 = gamma_gamma_moment(cum, 3, 3)

    value = (a * a * e_gg + b * b * e_22 + e_33
             + 2.0 * a * b * e_g2 - 2.0 * a * e_g3 - 2.0 * b * e_23)
    tol = get_tolerances()['radicand']
    if value < -tol:
        raise NegativeRadicand(f"second moment came out negative ({value:.3g})")
    return max(value, 0.0)


def gstar_residual_paths(spec: Spectrum, z, params: BGParams):
    """G/(a1 a2) + alpha13 Gamma_2 - Gamma_3 on each path (the L1 integrand of the Gamma bound)"""
    constants = bound_constants(params)
    gammas = gamma_paths(spec, z)
    a = 1.0 / (params.alpha1 * params.alpha2)
    return a * gammas[:, 0] + constants.alpha13 * gammas[:, 1] - gammas[:, 2]
