#!/usr/bin/env python3
"""
Bilateral gamma (BG) distribution analytics

X ~ BG(alpha1, p1, alpha2, p2) is the law of X1 - X2 where X1 ~ Gamma(p1, rate alpha1)
and X2 ~ Gamma(p2, rate alpha2) are independent. This module provides:

1. Parameter validation and classification (GENERAL, VG, SVG, LAPLACE)
2. Characteristic function, Levy density and Levy exponent
3. Exact cumulants (orders 1..6) and raw moments
4. Exact sampling as a difference of gamma draws
5. The constants alpha12 / alpha13 used by every d3 bound

Special and limiting cases:
    VG       p1 = p2
    SVG      p1 = p2 and alpha1 = alpha2
    Laplace  SVG with p = 1
    Normal   SVG(sqrt(2p)/sigma, p) as p grows  (see normal_limit_params)
    Gamma    p2 -> infinity                     (see gamma_cumulant)
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import special

from errors import BoundInapplicable, ConfigInvalid, DomainError, NonPositiveParameter, OrderOutOfRange

logger = logging.getLogger(__name__)

GENERAL = 'GENERAL'
VG = 'VG'
SVG = 'SVG'
LAPLACE = 'LAPLACE'

MAX_CUMULANT_ORDER = 6

_TAG_RTOL = 1e-12


def _same(a, b):
    return math.isclose(a, b, rel_tol=_TAG_RTOL, abs_tol=0.0)


@dataclass(frozen=True)
class BGParams:
    """The four BG parameters: rates alpha1, alpha2 and shapes p1, p2"""
    alpha1: float
    p1: float
    alpha2: float
    p2: float

    def __post_init__(self):
        for name in ('alpha1', 'p1', 'alpha2', 'p2'):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise NonPositiveParameter(f"{name} must be strictly positive, got {value}")

    @classmethod
    def from_string(cls, text):
        """Parse 'a1,p1,a2,p2' as used on the command line"""
        parts = [part.strip() for part in str(text).split(',')]
        if len(parts) != 4:
            raise ConfigInvalid(f"expected four comma-separated values, got '{text}'")
        try:
            values = [float(part) for part in parts]
        except ValueError:
            raise ConfigInvalid(f"BG parameters must be numbers, got '{text}'")
        return cls(*values)

    @classmethod
    def vg(cls, alpha1, alpha2, p):
        return cls(alpha1, p, alpha2, p)

    @classmethod
    def svg(cls, alpha, p):
        return cls(alpha, p, alpha, p)

    @classmethod
    def laplace(cls, alpha):
        return cls(alpha, 1.0, alpha, 1.0)

    def as_tuple(self):
        return (self.alpha1, self.p1, self.alpha2, self.p2)

    def to_dict(self):
        return {'alpha1': self.alpha1, 'p1': self.p1, 'alpha2': self.alpha2, 'p2': self.p2}

    @property
    def mean(self):
        return self.p1 / self.alpha1 - self.p2 / self.alpha2

    @property
    def variance(self):
        return self.p1 / self.alpha1 ** 2 + self.p2 / self.alpha2 ** 2


@dataclass(frozen=True)
class BoundConstants:
    """alpha12 = a1 a2 / (a1 a2 - (1 + |a1 - a2|)),  alpha13 = 1/a1 - 1/a2"""
    alpha12: float
    alpha13: float

    def to_dict(self):
        return {'alpha12': self.alpha12, 'alpha13': self.alpha13}


@dataclass(frozen=True)
class CumulantVector:
    """
    Cumulants kappa_1..kappa_6, exact or estimated.

    kappa[0] holds kappa_1. se is None for exact values. Orders that were not
    computed are stored as nan.
    """
    kappa: tuple
    se: Optional[tuple] = None
    source: str = 'exact'

    def __post_init__(self):
        if len(self.kappa) != MAX_CUMULANT_ORDER:
            raise OrderOutOfRange(f"expected {MAX_CUMULANT_ORDER} cumulants, got {len(self.kappa)}")
        if self.se is not None and len(self.se) != MAX_CUMULANT_ORDER:
            raise OrderOutOfRange("standard errors must match the cumulant orders")
        k2 = self.kappa[1]
        if np.isfinite(k2) and k2 < 0:
            raise DomainError(f"kappa_2 is a variance and cannot be negative, got {k2}")

    @classmethod
    def from_sequence(cls, values: Sequence[float], se=None, source='exact', first_order=1):
        """Build from kappa_first_order..; missing orders become nan"""
        kappa = [float('nan')] * MAX_CUMULANT_ORDER
        errors = None if se is None else [float('nan')] * MAX_CUMULANT_ORDER
        for offset, value in enumerate(values):
            kappa[first_order - 1 + offset] = float(value)
            if se is not None:
                errors[first_order - 1 + offset] = float(se[offset])
        return cls(tuple(kappa), None if errors is None else tuple(errors), source)

    def k(self, j):
        if not 1 <= j <= MAX_CUMULANT_ORDER:
            raise OrderOutOfRange(f"cumulant order must be in 1..{MAX_CUMULANT_ORDER}, got {j}")
        return self.kappa[j - 1]

    def standard_error(self, j):
        if self.se is None:
            return 0.0
        return self.se[j - 1]

    def require(self, orders):
        """Raise OrderOutOfRange unless every listed order is available"""
        missing = [j for j in orders if not np.isfinite(self.k(j))]
        if missing:
            raise OrderOutOfRange(f"cumulant orders {missing} are required but missing")

    def to_dict(self):
        out = {'source': self.source, 'kappa': {str(j): self.kappa[j - 1] for j in range(1, 7)}}
        if self.se is not None:
            out['se'] = {str(j): self.se[j - 1] for j in range(1, 7)}
        return out


def validate(params):
    """Classify the parameters; nesting is VG > SVG > LAPLACE"""
    if not isinstance(params, BGParams):
        params = BGParams(*params)
    for name, value in params.to_dict().items():
        if not value > 0:
            raise NonPositiveParameter(f"{name} must be strictly positive, got {value}")
    if not _same(params.p1, params.p2):
        return GENERAL
    if not _same(params.alpha1, params.alpha2):
        return VG
    if _same(params.p1, 1.0):
        return LAPLACE
    return SVG


def log_char_fn(params: BGParams, z):
    """Principal-branch log of the characteristic function"""
    z = np.asarray(z, dtype=float)
    a1, p1, a2, p2 = params.as_tuple()
    return (p1 * np.log(a1 / (a1 - 1j * z))
            + p2 * np.log(a2 / (a2 + 1j * z)))


def char_fn(params: BGParams, z):
    """phi(z) = (a1/(a1 - iz))^p1 (a2/(a2 + iz))^p2"""
    value = np.exp(log_char_fn(params, z))
    if np.ndim(value) == 0:
        return complex(value)
    return value


def levy_signed_weight(params: BGParams, u, tilted=False):
    """
    Density of the Levy measure nu_bg at u != 0.

    With tilted=True returns u * nu_bg(du)/du, i.e. p1 e^{-a1 u} for u > 0 and
    -p2 e^{-a2 |u|} for u < 0, the weight inside every Stein integral.
    """
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr == 0):
        raise DomainError("the Levy density is not defined at u = 0")
    a1, p1, a2, p2 = params.as_tuple()
    positive = u_arr > 0
    absu = np.abs(u_arr)
    tilted_weight = np.where(positive, p1 * np.exp(-a1 * absu), -p2 * np.exp(-a2 * absu))
    result = tilted_weight if tilted else tilted_weight / u_arr
    if np.ndim(result) == 0:
        return float(result)
    return result


def levy_exponent(params: BGParams, z, n_nodes=128):
    """
    int (e^{izu} - 1) nu_bg(du) by Gauss-Laguerre on both half-lines.

    Accuracy degrades once |z|/alpha is large (oscillation against the
    e^{-alpha u} weight); raise n_nodes in that regime.
    """
    nodes, weights = special.roots_laguerre(n_nodes)
    z_arr = np.atleast_1d(np.asarray(z, dtype=float))
    a1, p1, a2, p2 = params.as_tuple()
    # u = v / alpha turns e^{-alpha u} du / u into e^{-v} dv / v
    pos = p1 * ((np.exp(1j * np.outer(z_arr, nodes) / a1) - 1.0) / nodes) @ weights
    neg = p2 * ((np.exp(-1j * np.outer(z_arr, nodes) / a2) - 1.0) / nodes) @ weights
    result = pos + neg
    if np.ndim(z) == 0:
        return complex(result[0])
    return result


def cumulant(params: BGParams, j):
    """kappa_j = (j-1)! (p1 / a1^j + (-1)^j p2 / a2^j)"""
    if not isinstance(j, (int, np.integer)) or not 1 <= j <= MAX_CUMULANT_ORDER:
        raise OrderOutOfRange(f"cumulant order must be an integer in 1..{MAX_CUMULANT_ORDER}, got {j}")
    a1, p1, a2, p2 = params.as_tuple()
    return math.factorial(j - 1) * (p1 / a1 ** j + (-1) ** j * p2 / a2 ** j)


def cumulants(params: BGParams):
    return CumulantVector(tuple(cumulant(params, j) for j in range(1, MAX_CUMULANT_ORDER + 1)))


def gamma_cumulant(alpha, p, j):
    """kappa_j of Ga(alpha, p) (rate alpha, shape p): (j-1)! p / alpha^j"""
    if alpha <= 0 or p <= 0:
        raise NonPositiveParameter(f"gamma parameters must be positive, got alpha={alpha}, p={p}")
    if not isinstance(j, (int, np.integer)) or not 1 <= j <= MAX_CUMULANT_ORDER:
        raise OrderOutOfRange(f"cumulant order must be an integer in 1..{MAX_CUMULANT_ORDER}, got {j}")
    return math.factorial(j - 1) * p / alpha ** j


def moment(params: BGParams, k):
    """E X^k from the binomial expansion of (X1 - X2)^k"""
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise OrderOutOfRange(f"moment order must be a positive integer, got {k}")
    a1, p1, a2, p2 = params.as_tuple()
    total = 0.0
    for j in range(k + 1):
        # poch(p, n) = Gamma(p + n) / Gamma(p)
        total += (special.comb(k, j, exact=True) * (-1) ** j
                  * special.poch(p1, k - j) / a1 ** (k - j)
                  * special.poch(p2, j) / a2 ** j)
    return float(total)


def sample(params: BGParams, n, seed):
    """n i.i.d. draws of X1 - X2; numpy's gamma generator is exact (Marsaglia-Tsang)"""
    if n < 1:
        raise OrderOutOfRange(f"sample size must be at least 1, got {n}")
    rng = np.random.default_rng(seed)
    a1, p1, a2, p2 = params.as_tuple()
    positive = rng.gamma(shape=p1, scale=1.0 / a1, size=n)
    negative = rng.gamma(shape=p2, scale=1.0 / a2, size=n)
    logger.debug("drew %d BG samples with seed %s", n, seed)
    return positive - negative


def bound_constants(params: BGParams):
    """alpha12 and alpha13; requires a1 a2 > 1 + |a1 - a2|"""
    a1, a2 = params.alpha1, params.alpha2
    margin = a1 * a2 - (1.0 + abs(a1 - a2))
    if not margin > 0:
        raise BoundInapplicable(
            f"bounds require alpha1*alpha2 > 1 + |alpha1 - alpha2| (got {a1 * a2:.6g} vs {1.0 + abs(a1 - a2):.6g})"
        )
    return BoundConstants(alpha12=a1 * a2 / margin, alpha13=1.0 / a1 - 1.0 / a2)


def normal_limit_params(sigma2, p):
    """SVG(sqrt(2p)/sigma, p): variance sigma^2 for every p, converges to N(0, sigma^2)"""
    if sigma2 <= 0 or p <= 0:
        raise NonPositiveParameter(f"sigma2 and p must be positive, got {sigma2}, {p}")
    alpha = math.sqrt(2.0 * p / sigma2)
    return BGParams.svg(alpha, p)


def scale(params: BGParams, c):
    """Law of c X for c > 0"""
    if c <= 0:
        raise NonPositiveParameter(f"scale factor must be positive, got {c}")
    return BGParams(params.alpha1 / c, params.p1, params.alpha2 / c, params.p2)


def convolve(first: BGParams, second: BGParams):
    """Law of the sum of independent BG variables sharing both rates"""
    if not (_same(first.alpha1, second.alpha1) and _same(first.alpha2, second.alpha2)):
        raise DomainError("BG laws are closed under convolution only for equal rates")
    return BGParams(first.alpha1, first.p1 + second.p1, first.alpha2, first.p2 + second.p2)
