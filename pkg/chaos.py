#!/usr/bin/env python3
"""
Second Wiener chaos in a finite orthonormal basis

G = I_2(f) is stored through the N x N symmetric coefficient matrix of f. With
eigenvalues lambda_j of that matrix, G has the law of sum_j lambda_j (Z_j^2 - 1)
for i.i.d. standard normals Z_j, and

    kappa_p(G) = 2^{p-1} (p-1)! sum_j lambda_j^p
               = 2^{p-1} (p-1)! <f (x)_1^{(p-1)} f, f>

where the iterated contraction f (x)_1^{(p)} f is the p-th matrix power.
chaos_cumulant evaluates both routes and insists they agree.

Kernel text format (read_kernel / write_kernel):

    N
    c11 c12 ... c1N
    ...
    cN1 cN2 ... cNN
"""

import logging
import math
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg

from bg_core import MAX_CUMULANT_ORDER, CumulantVector
from bg_utils import get_mc_params, get_tolerances, write_text
from errors import (ConfigInvalid, DimMismatch, DomainError, EigenFailure, NotSymmetric, OrderOutOfRange,
                    RouteMismatch)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ChaosKernel:
    """Coefficients of f in H (.) H, symmetric N x N"""
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=float)
        if coeffs.ndim != 2 or coeffs.shape[0] != coeffs.shape[1] or coeffs.shape[0] < 1:
            raise DimMismatch(f"kernel coefficients must be a non-empty square matrix, got shape {coeffs.shape}")
        if not np.all(np.isfinite(coeffs)):
            raise NotSymmetric("kernel coefficients must be finite")
        tol = get_tolerances()['symmetry']
        asym = float(np.max(np.abs(coeffs - coeffs.T)))
        if asym > tol * max(1.0, float(np.max(np.abs(coeffs)))):
            raise NotSymmetric(f"kernel is not symmetric (max |f_ij - f_ji| = {asym:.3g})")
        coeffs.setflags(write=False)
        object.__setattr__(self, 'coeffs', coeffs)

    @property
    def dim(self):
        return self.coeffs.shape[0]

    @classmethod
    def zeros(cls, dim):
        return cls(np.zeros((dim, dim)))

    @classmethod
    def diagonal(cls, values):
        return cls(np.diag(np.asarray(values, dtype=float)))

    def hs_norm2(self):
        """<f, f> = sum of squared coefficients"""
        return float(np.sum(self.coeffs * self.coeffs))

    def scaled(self, c):
        return ChaosKernel(c * self.coeffs)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """
    Eigenvalues of A_f ordered by descending |lambda|, positive first on ties.

    vectors holds the matching orthonormal eigenvectors (columns) when the
    spectrum came from a kernel, None for spectra given literally.
    """
    lambdas: np.ndarray
    vectors: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        lambdas = np.atleast_1d(np.array(self.lambdas, dtype=float))
        if lambdas.ndim != 1 or lambdas.size < 1:
            raise DimMismatch("a spectrum needs at least one eigenvalue")
        lambdas.setflags(write=False)
        object.__setattr__(self, 'lambdas', lambdas)

    @classmethod
    def from_values(cls, values):
        """Literal spectrum, sorted into the canonical order"""
        values = np.asarray(values, dtype=float)
        return cls(values[_canonical_order(values)])

    @property
    def dim(self):
        return self.lambdas.size

    def power_sum(self, p):
        return float(np.sum(self.lambdas ** p))

    def to_kernel(self):
        """Diagonal kernel with this spectrum"""
        return ChaosKernel.diagonal(self.lambdas)

    def reconstruct(self):
        if self.vectors is None:
            return np.diag(self.lambdas)
        return (self.vectors * self.lambdas) @ self.vectors.T


def _canonical_order(values):
    # lexsort keys run last-to-first: |lambda| descending, then sign (positive first)
    return np.lexsort((-values, -np.abs(values)))


def spectrum(kernel: ChaosKernel):
    """Eigenvalues of the coefficient matrix via LAPACK syevd (deterministic)"""
    try:
        values, vectors = linalg.eigh(kernel.coeffs)
    except linalg.LinAlgError as e:
        raise EigenFailure(f"symmetric eigensolver did not converge: {e}")
    order = _canonical_order(values)
    values = values[order]
    vectors = vectors[:, order]

    norm2 = kernel.hs_norm2()
    defect = abs(float(np.sum(values ** 2)) - norm2)
    if defect > 1e-10 * max(1.0, norm2):
        raise EigenFailure(f"sum of squared eigenvalues misses <f,f> by {defect:.3g}")
    return Spectrum(values, vectors)


def contract(kernel: ChaosKernel, p):
    """f (x)_1^{(p)} f, the p-th matrix power; p = 1 gives f itself"""
    if not isinstance(p, (int, np.integer)) or p < 1:
        raise OrderOutOfRange(f"contraction order must be a positive integer, got {p}")
    power = np.linalg.matrix_power(kernel.coeffs, int(p))
    # remove rounding asymmetry of the repeated products
    return ChaosKernel(0.5 * (power + power.T))


def inner(a: ChaosKernel, b: ChaosKernel):
    """Hilbert-Schmidt inner product sum_ij a_ij b_ij"""
    if a.dim != b.dim:
        raise DimMismatch(f"kernel dimensions differ: {a.dim} vs {b.dim}")
    return float(np.sum(a.coeffs * b.coeffs))


def _as_kernel(source):
    if isinstance(source, Spectrum):
        return source.to_kernel()
    return source


def _cumulant_routes(kernel, spec, p):
    factor = 2 ** (p - 1) * math.factorial(p - 1)
    trace_route = spec.power_sum(p)
    contraction_route = inner(contract(kernel, p - 1), kernel)
    scale = float(np.sum(np.abs(spec.lambdas) ** p))
    tol = get_tolerances()['route_rel']
    if abs(trace_route - contraction_route) > tol * scale:
        raise RouteMismatch(
            f"kappa_{p}: trace route {trace_route!r} and contraction route {contraction_route!r} disagree"
        )
    return factor * trace_route


def chaos_cumulant(kernel, p):
    """kappa_p(G) for 2 <= p <= 6, cross-checked by two independent routes"""
    if not isinstance(p, (int, np.integer)) or not 2 <= p <= MAX_CUMULANT_ORDER:
        raise OrderOutOfRange(f"chaos cumulant order must be in 2..{MAX_CUMULANT_ORDER}, got {p}")
    kernel = _as_kernel(kernel)
    return _cumulant_routes(kernel, spectrum(kernel), int(p))


def chaos_cumulants(kernel):
    """All of kappa_1..kappa_6 (kappa_1 = 0) with one eigendecomposition"""
    kernel = _as_kernel(kernel)
    spec = spectrum(kernel)
    values = [0.0] + [_cumulant_routes(kernel, spec, p) for p in range(2, MAX_CUMULANT_ORDER + 1)]
    return CumulantVector(tuple(values), source='kernel')


def spectrum_cumulant(spec: Spectrum, p):
    """kappa_p from the eigenvalues alone; kappa_1 = 0"""
    if not isinstance(p, (int, np.integer)) or not 1 <= p <= MAX_CUMULANT_ORDER:
        raise OrderOutOfRange(f"cumulant order must be in 1..{MAX_CUMULANT_ORDER}, got {p}")
    if p == 1:
        return 0.0
    return 2 ** (p - 1) * math.factorial(p - 1) * spec.power_sum(p)


def weighted_fluctuation(weights, z):
    """
    sum_j w_j (z_j^2 - 1) for each row of z.

    Accumulates column by column so every caller (sampler, Gamma paths) gets
    bit-identical values for the same rows regardless of batch shape.
    """
    z = np.atleast_2d(z)
    weights = np.asarray(weights, dtype=float)
    if z.shape[1] != weights.size:
        raise DimMismatch(f"paths have {z.shape[1]} coordinates, spectrum has {weights.size}")
    total = np.zeros(z.shape[0])
    for j in range(weights.size):
        total += weights[j] * (z[:, j] * z[:, j] - 1.0)
    return total


def sample_chaos(spec: Spectrum, n, seed, keep_paths=True, chunk_size=None):
    """
    n draws of sum_j lambda_j (Z_j^2 - 1), plus the Gaussian paths behind them.

    Paths are drawn in chunks of rows from one generator, so the result does
    not depend on chunk_size. keep_paths=False returns None for the paths.
    """
    if n < 1:
        raise OrderOutOfRange(f"sample size must be at least 1, got {n}")
    if chunk_size is None:
        chunk_size = get_mc_params()['chunk_size']
    rng = np.random.default_rng(seed)
    samples = np.empty(n)
    paths = np.empty((n, spec.dim)) if keep_paths else None

    start = 0
    while start < n:
        stop = min(n, start + chunk_size)
        z = rng.standard_normal((stop - start, spec.dim))
        samples[start:stop] = weighted_fluctuation(spec.lambdas, z)
        if keep_paths:
            paths[start:stop] = z
        start = stop
    logger.debug("drew %d chaos samples (dim %d) with seed %s", n, spec.dim, seed)
    return samples, paths


def random_kernel(dim, seed, scale=1.0):
    """Symmetric kernel with i.i.d. N(0, scale^2) upper-triangle entries"""
    if dim < 1:
        raise DimMismatch(f"kernel dimension must be at least 1, got {dim}")
    rng = np.random.default_rng(seed)
    upper = np.triu(rng.normal(scale=scale, size=(dim, dim)))
    return ChaosKernel(upper + np.triu(upper, 1).T)


def bg_matching_spectrum(params):
    """
    Finite spectrum whose chaos element has exactly the law BG(a1, p1, a2, p2).

    Ga(a, p) - p/a is sum_{j <= 2p} (Z_j^2 - 1) / (2a) when 2p is an integer,
    so the target must have mean zero and half-integer shapes.
    """
    a1, p1, a2, p2 = params.as_tuple()
    if not math.isclose(p1 * a2, p2 * a1, rel_tol=1e-12, abs_tol=0.0):
        raise DomainError("a second-chaos element has mean zero; the target mean is not")
    counts = []
    for p in (p1, p2):
        twice = round(2.0 * p)
        if twice < 1 or not math.isclose(2.0 * p, twice, rel_tol=0.0, abs_tol=1e-12):
            raise DomainError(f"shape {p} is not a multiple of 1/2")
        counts.append(twice)
    values = [0.5 / a1] * counts[0] + [-0.5 / a2] * counts[1]
    return Spectrum.from_values(values)


def interpolated_spectrum(start, target, weight):
    """target + weight * (start - target), eigenvalue by eigenvalue in canonical order"""
    if start.dim != target.dim:
        raise DimMismatch(f"spectra differ in length: {start.dim} vs {target.dim}")
    if not 0.0 <= weight <= 1.0:
        raise DomainError(f"interpolation weight must be in [0, 1], got {weight}")
    return Spectrum.from_values(target.lambdas + weight * (start.lambdas - target.lambdas))


def clt_spectrum(sigma2, n_pairs):
    """n_pairs of +/- sigma / (2 sqrt n): variance sigma^2, kappa_3 = 0, kappa_6 ~ 1/n^2"""
    if sigma2 <= 0:
        raise DomainError(f"sigma^2 must be positive, got {sigma2}")
    if not isinstance(n_pairs, (int, np.integer)) or n_pairs < 1:
        raise OrderOutOfRange(f"the number of pairs must be a positive integer, got {n_pairs}")
    value = math.sqrt(sigma2) / (2.0 * math.sqrt(n_pairs))
    return Spectrum.from_values([value] * n_pairs + [-value] * n_pairs)


def read_kernel(path):
    """Parse the kernel text format; any malformed input is ConfigInvalid"""
    if not os.path.isfile(path):
        raise ConfigInvalid(f"kernel file not found: {path}")
    with open(path) as handle:
        lines = [line.strip() for line in handle if line.strip() and not line.lstrip().startswith('#')]
    if not lines:
        raise ConfigInvalid(f"kernel file is empty: {path}")
    try:
        dim = int(lines[0])
        rows = [[float(token) for token in line.split()] for line in lines[1:]]
    except ValueError as e:
        raise ConfigInvalid(f"kernel file {path} is malformed: {e}")
    if dim < 1 or len(rows) != dim or any(len(row) != dim for row in rows):
        raise ConfigInvalid(f"kernel file {path} must hold {dim} rows of {dim} values")
    return ChaosKernel(np.array(rows))


def write_kernel(path, kernel: ChaosKernel):
    lines = [str(kernel.dim)]
    lines += [' '.join(repr(float(v)) for v in row) for row in kernel.coeffs]
    return write_text(path, '\n'.join(lines) + '\n')
