#!/usr/bin/env python3
"""
Homogeneous sums of order 2

    H_2(N, f, Y) = sum_{i != j} f(i, j) Y_i Y_j = 2 sum_{i < j} f(i, j) Y_i Y_j

for a symmetric coefficient table f vanishing on the diagonal and independent
centred unit-variance innovations Y. With Gaussian innovations H_2 is the
second-chaos element with the same table as kernel (bridge_kernel), which is
how its cumulants are computed exactly.

Influence conventions
---------------------
'displayed'  Inf_i(f) = sum_{j != i} f(i, j)^2
             satisfies E[Var(H_2 | Y_k, k != i)] = 4 Inf_i(f)
'worked'     Inf_i(f) = sum_{j != i} |f(i, j)| / ((2!)^2 (2-1)!)
             the normalisation behind the U-statistic value 1/(4n)
             linear in f: HomogSumSpec.scaled(c) multiplies it by |c|, not c^2,
             so invariance_term does not rescale the way it does for 'displayed'
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from bg_utils import get_mc_params, get_tolerances
from chaos import ChaosKernel
from errors import (DiagonalNotZero, DimMismatch, DomainError, IndexOutOfRange, NonPositiveParameter,
                    NotSymmetric, OrderOutOfRange)
from mc import EstimatorReport, batch_means

logger = logging.getLogger(__name__)

STANDARD_NORMAL = 'standard-normal'
RADEMACHER = 'rademacher'
CENTERED_UNIFORM = 'centered-uniform'
USER_MOMENTS = 'user-moments'

DISPLAYED = 'displayed'
WORKED = 'worked'
INFLUENCE_CONVENTIONS = (DISPLAYED, WORKED)

_SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class InnovationLaw:
    """
    Law of the innovations Y_i with rho = E|Y_i|^3.

    Built-in laws are centred with unit variance. A user-moments law declares
    rho explicitly and may carry a sampler(rng, size) for simulation.
    """
    tag: str
    rho: float
    sampler: Optional[Callable] = None

    def __post_init__(self):
        if not np.isfinite(self.rho) or self.rho <= 0:
            raise NonPositiveParameter(f"rho must be positive and finite, got {self.rho}")

    @classmethod
    def standard_normal(cls):
        return cls(STANDARD_NORMAL, 2.0 * math.sqrt(2.0 / math.pi))

    @classmethod
    def rademacher(cls):
        return cls(RADEMACHER, 1.0)

    @classmethod
    def centered_uniform(cls):
        # uniform on [-sqrt 3, sqrt 3]
        return cls(CENTERED_UNIFORM, 3.0 * _SQRT3 / 4.0)

    @classmethod
    def user_moments(cls, rho, sampler=None):
        return cls(USER_MOMENTS, float(rho), sampler)

    @classmethod
    def from_tag(cls, tag, rho=None):
        builders = {
            STANDARD_NORMAL: cls.standard_normal,
            'normal': cls.standard_normal,
            RADEMACHER: cls.rademacher,
            CENTERED_UNIFORM: cls.centered_uniform,
            'uniform': cls.centered_uniform,
        }
        if tag == USER_MOMENTS:
            if rho is None:
                raise DomainError("a user-moments innovation law needs an explicit rho")
            return cls.user_moments(rho)
        if tag not in builders:
            raise DomainError(f"unknown innovation law '{tag}'")
        return builders[tag]()

    def draw(self, rng, size):
        if self.tag == STANDARD_NORMAL:
            return rng.standard_normal(size)
        if self.tag == RADEMACHER:
            return 2.0 * rng.integers(0, 2, size=size).astype(float) - 1.0
        if self.tag == CENTERED_UNIFORM:
            return rng.uniform(-_SQRT3, _SQRT3, size=size)
        if self.sampler is None:
            raise DomainError("this user-moments innovation law has no sampler")
        return np.asarray(self.sampler(rng, size), dtype=float)


@dataclass(frozen=True, eq=False)
class HomogSumSpec:
    f_table: np.ndarray
    innovation: InnovationLaw = InnovationLaw.standard_normal()

    def __post_init__(self):
        table = np.array(self.f_table, dtype=float)
        if table.ndim != 2 or table.shape[0] != table.shape[1]:
            raise DimMismatch(f"f_table must be square, got shape {table.shape}")
        if table.shape[0] < 2:
            raise DimMismatch(f"a homogeneous sum needs at least two variables, got {table.shape[0]}")
        tol = get_tolerances()['symmetry']
        scale = max(1.0, float(np.max(np.abs(table))))
        if float(np.max(np.abs(np.diag(table)))) > tol * scale:
            raise DiagonalNotZero("f_table must vanish on the diagonal")
        if float(np.max(np.abs(table - table.T))) > tol * scale:
            raise NotSymmetric("f_table must be symmetric")
        table.setflags(write=False)
        object.__setattr__(self, 'f_table', table)

    @property
    def n_vars(self):
        return self.f_table.shape[0]

    def hs_norm2(self):
        return float(np.sum(self.f_table * self.f_table))

    def scaled(self, c):
        return HomogSumSpec(c * self.f_table, self.innovation)

    def with_innovation(self, innovation):
        return HomogSumSpec(self.f_table, innovation)


def homog_sum_eval(spec: HomogSumSpec, y):
    """H_2(N, f, y) for one vector y, or for each row of a matrix"""
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != spec.n_vars:
        raise DimMismatch(f"expected {spec.n_vars} innovations, got {y.shape[-1]}")
    if y.ndim == 1:
        return float(y @ spec.f_table @ y)
    return np.sum((y @ spec.f_table) * y, axis=1)


def influence(spec: HomogSumSpec, i, convention=DISPLAYED):
    """Inf_i(f) for the 1-based variable index i"""
    if not isinstance(i, (int, np.integer)) or not 1 <= i <= spec.n_vars:
        raise IndexOutOfRange(f"variable index must be in 1..{spec.n_vars}, got {i}")
    return float(_influences(spec, convention)[i - 1])


def _influences(spec, convention):
    if convention == DISPLAYED:
        return np.sum(spec.f_table ** 2, axis=1)
    if convention == WORKED:
        return np.sum(np.abs(spec.f_table), axis=1) / (math.factorial(2) ** 2 * math.factorial(1))
    raise DomainError(f"unknown influence convention '{convention}'")


def max_influence(spec: HomogSumSpec, convention=DISPLAYED):
    return float(np.max(_influences(spec, convention)))


def ustat_kernel(n, innovation=None):
    """Table of U_n = binom(n, 2)^{-1} sum_{i<j} Y_i Y_j: f(i, j) = 1/(n(n-1)) off the diagonal"""
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise OrderOutOfRange(f"the U-statistic needs n >= 2, got {n}")
    table = np.full((n, n), 1.0 / (n * (n - 1)))
    np.fill_diagonal(table, 0.0)
    return HomogSumSpec(table, innovation or InnovationLaw.standard_normal())


def bridge_kernel(spec: HomogSumSpec):
    """The same table read as a chaos kernel: H_2(N, f, Z) = I_2(g) for Gaussian Z"""
    return ChaosKernel(np.array(spec.f_table))


def sample_homog(spec: HomogSumSpec, n_samples, seed, chunk_size=None):
    """n_samples i.i.d. draws of H_2(N, f, Y) under its innovation law"""
    if n_samples < 1:
        raise OrderOutOfRange(f"sample size must be at least 1, got {n_samples}")
    if chunk_size is None:
        chunk_size = get_mc_params()['chunk_size']
    # chunk_size bounds the number of innovation values held at once
    rows = max(1, chunk_size // spec.n_vars)
    rng = np.random.default_rng(seed)
    out = np.empty(n_samples)
    start = 0
    while start < n_samples:
        stop = min(n_samples, start + rows)
        y = spec.innovation.draw(rng, (stop - start, spec.n_vars))
        out[start:stop] = homog_sum_eval(spec, y)
        start = stop
    logger.debug("drew %d homogeneous sums (N=%d, %s innovations)", n_samples, spec.n_vars, spec.innovation.tag)
    return out


def conditional_variance_mc(spec: HomogSumSpec, i, n_samples, seed, n_batches=32):
    """
    E[Var(H_2 | Y_k, k != i)] by resampling Y_i.

    Each draw keeps the other innovations, takes two independent copies of
    Y_i and uses (H' - H'')^2 / 2, whose conditional mean is the conditional
    variance.
    """
    if not isinstance(i, (int, np.integer)) or not 1 <= i <= spec.n_vars:
        raise IndexOutOfRange(f"variable index must be in 1..{spec.n_vars}, got {i}")
    rng = np.random.default_rng(seed)
    y = spec.innovation.draw(rng, (n_samples, spec.n_vars))
    first = homog_sum_eval(spec, y)
    y[:, i - 1] = spec.innovation.draw(rng, n_samples)
    second = homog_sum_eval(spec, y)
    report = batch_means(0.5 * (first - second) ** 2, n_batches)
    return EstimatorReport(estimate=report.estimate, se=report.se, n=report.n,
                           details={'index': int(i), 'seed': seed})
