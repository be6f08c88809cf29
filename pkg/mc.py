#!/usr/bin/env python3
"""
Monte-Carlo estimators shared by every experiment

- sample cumulants (orders 2..6) with batch-means standard errors
- exact W1 distance between two empirical laws
- smooth-W3 lower bound over a fixed dictionary of test functions
- Gauss-Laguerre nodes for the Levy integrals

The d3 metric itself is never estimated; experiments bracket it between the
dictionary lower bound here and the theoretical upper bounds in bounds.py.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from bg_core import MAX_CUMULANT_ORDER, CumulantVector
from bg_utils import get_mc_params
from errors import ConfigInvalid, EmptyDictionary, EmptyInput, OrderOutOfRange, TooFewSamples

logger = logging.getLogger(__name__)

MIN_SAMPLES_PER_ORDER = 1000
MAX_LAGUERRE_NODES = 256


@dataclass(frozen=True)
class MCConfig:
    n_samples: int
    seed: int
    n_batches: int = 32

    def __post_init__(self):
        if self.n_batches < 8:
            raise ConfigInvalid(f"n_batches must be at least 8, got {self.n_batches}")
        if self.n_samples < 1 or self.n_samples % self.n_batches != 0:
            raise ConfigInvalid(
                f"n_samples ({self.n_samples}) must be a positive multiple of n_batches ({self.n_batches})"
            )

    @classmethod
    def from_config(cls, **overrides):
        """Defaults from config.ini / environment, then keyword overrides"""
        params = get_mc_params()
        values = {
            'n_samples': params['n_samples'],
            'seed': params['seed'],
            'n_batches': params['n_batches'],
        }
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)

    def to_dict(self):
        return {'n_samples': self.n_samples, 'seed': self.seed, 'n_batches': self.n_batches}


@dataclass(frozen=True)
class EstimatorReport:
    estimate: float
    se: float
    n: int
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.se >= 0:
            raise ConfigInvalid(f"standard error must be non-negative, got {self.se}")

    def to_dict(self):
        out = {'estimate': self.estimate, 'se': self.se, 'n': self.n}
        if self.details:
            out['details'] = dict(self.details)
        return out


def central_moments(samples, max_order, axis=-1):
    """Mean and central moments m_2..m_max_order along axis"""
    mean = np.mean(samples, axis=axis, keepdims=True)
    centered = samples - mean
    moments = {1: np.squeeze(mean, axis=axis)}
    power = centered.copy()
    for order in range(2, max_order + 1):
        power = power * centered
        moments[order] = np.mean(power, axis=axis)
    return moments


def cumulants_from_central_moments(m):
    """Moment-to-cumulant polynomials for central moments"""
    kappa = {1: m[1]}
    if 2 in m:
        kappa[2] = m[2]
    if 3 in m:
        kappa[3] = m[3]
    if 4 in m:
        kappa[4] = m[4] - 3.0 * m[2] ** 2
    if 5 in m:
        kappa[5] = m[5] - 10.0 * m[3] * m[2]
    if 6 in m:
        kappa[6] = m[6] - 15.0 * m[4] * m[2] - 10.0 * m[3] ** 2 + 30.0 * m[2] ** 3
    return kappa


def sample_cumulants(samples, max_order=6, cfg=None):
    """
    Biased moment-based cumulant estimates kappa_1..kappa_max_order.

    Standard errors come from batch means over cfg.n_batches contiguous
    batches; a trailing remainder that does not fill a batch is left out of
    the error estimate only.
    """
    if not 2 <= max_order <= MAX_CUMULANT_ORDER:
        raise OrderOutOfRange(f"max_order must be in 2..{MAX_CUMULANT_ORDER}, got {max_order}")
    samples = np.asarray(samples, dtype=float).ravel()
    n = samples.size
    if n < MIN_SAMPLES_PER_ORDER * max_order:
        raise TooFewSamples(
            f"need at least {MIN_SAMPLES_PER_ORDER * max_order} samples for order {max_order}, got {n}"
        )
    n_batches = cfg.n_batches if cfg is not None else get_mc_params()['n_batches']

    full = cumulants_from_central_moments(central_moments(samples, max_order))

    batch_size = n // n_batches
    batches = samples[:batch_size * n_batches].reshape(n_batches, batch_size)
    per_batch = cumulants_from_central_moments(central_moments(batches, max_order, axis=1))

    values = []
    errors = []
    for order in range(1, max_order + 1):
        values.append(float(full[order]))
        errors.append(float(np.std(per_batch[order], ddof=1) / math.sqrt(n_batches)))
    logger.debug("sample cumulants up to order %d from %d samples (%d batches)", max_order, n, n_batches)
    return CumulantVector.from_sequence(values, se=errors, source='mc')


def batch_means(values, n_batches=32):
    """Mean of values with a batch-means standard error"""
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        raise EmptyInput("cannot average an empty array")
    if values.size < n_batches:
        raise TooFewSamples(f"need at least {n_batches} values for batch means, got {values.size}")
    batch_size = values.size // n_batches
    means = values[:batch_size * n_batches].reshape(n_batches, batch_size).mean(axis=1)
    se = float(np.std(means, ddof=1) / math.sqrt(n_batches))
    return EstimatorReport(estimate=float(np.mean(values)), se=se, n=int(values.size))


def wasserstein1_empirical(a, b):
    """Exact W1 between the empirical laws of a and b (order-statistics coupling)"""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise EmptyInput("both sample arrays must be non-empty")
    if a.size == b.size:
        return float(np.mean(np.abs(np.sort(a) - np.sort(b))))
    return float(stats.wasserstein_distance(a, b))


def smooth_w3_lower_bound(a, b, dictionary):
    """
    max over the dictionary of |mean h(a) - mean h(b)|.

    Every dictionary member must be in W3, so the result is a lower bound on
    d3 between the two laws (up to sampling error, reported as se).
    """
    functions = list(dictionary)
    if not functions:
        raise EmptyDictionary("the test-function dictionary is empty")
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size < 2 or b.size < 2:
        raise EmptyInput("need at least two samples on each side")

    best = None
    for h in functions:
        ha = h(a)
        hb = h(b)
        gap = float(np.mean(ha) - np.mean(hb))
        se = math.sqrt(float(np.var(ha, ddof=1)) / a.size + float(np.var(hb, ddof=1)) / b.size)
        if best is None or abs(gap) > best[0]:
            best = (abs(gap), se, getattr(h, 'name', repr(h)))
    return EstimatorReport(estimate=best[0], se=best[1], n=int(min(a.size, b.size)),
                           details={'argmax': best[2]})


def gauss_laguerre(n):
    """Nodes/weights exact for int_0^inf e^{-x} p(x) dx, deg p <= 2n - 1"""
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_LAGUERRE_NODES:
        raise OrderOutOfRange(f"Gauss-Laguerre node count must be in 1..{MAX_LAGUERRE_NODES}, got {n}")
    nodes, weights = special.roots_laguerre(int(n))
    return np.asarray(nodes, dtype=float), np.asarray(weights, dtype=float)
