#!/usr/bin/env python3
"""
Closed-form d3 bounds for bilateral-gamma approximation

Every bound is returned as a BoundReport whose terms are listed separately so
reports show which part of the bound dominates. Variants:

    BG_CUMULANT     six-cumulant bound for a general BG target
    BG_GAMMAOP_MC   Gamma-operator bound over supplied (or pathwise MC) terms
    VG / SVG / LAPLACE   specialisations of BG_CUMULANT
    NORMAL          N(0, sigma^2) target
    GAMMA_DIST      Ga(alpha, p) target (Cauchy-Schwarz on the L1 term)
    DECOMPOSED      BG_CUMULANT rewritten in kappa_j(G) - kappa_j(X)
    HOMOG_SUM       homogeneous sums: invariance term + DECOMPOSED

The bounds control d3; lower_order_bound turns a d_r bound into a d_{r-1} one.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from bg_core import BGParams, BoundConstants, CumulantVector, bound_constants, cumulants
from bg_utils import get_tolerances
from chaos import chaos_cumulants, sample_chaos, spectrum
from errors import BoundInapplicable, DomainError, MeanNotZero, NegativeRadicand, OrderOutOfRange
from gamma_ops import gamma_gamma_moment, gstar_l2, gstar_residual_paths
from mc import batch_means

logger = logging.getLogger(__name__)

BG_CUMULANT = 'BG_CUMULANT'
BG_GAMMAOP_MC = 'BG_GAMMAOP_MC'
VG = 'VG'
SVG = 'SVG'
LAPLACE = 'LAPLACE'
NORMAL = 'NORMAL'
GAMMA_DIST = 'GAMMA_DIST'
DECOMPOSED = 'DECOMPOSED'
HOMOG_SUM = 'HOMOG_SUM'

VARIANTS = (BG_CUMULANT, BG_GAMMAOP_MC, VG, SVG, LAPLACE, NORMAL, GAMMA_DIST, DECOMPOSED, HOMOG_SUM)

# constant of the published Wasserstein bound for the Laplace target
LAPLACE_REFERENCE_FACTOR = 3.0


@dataclass(frozen=True)
class BoundReport:
    variant: str
    terms: dict
    total: float
    constants: Optional[BoundConstants] = None
    source: str = 'exact'
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise DomainError(f"unknown bound variant {self.variant}")
        negative = {name: value for name, value in self.terms.items() if not value >= 0}
        if negative:
            raise NegativeRadicand(f"bound terms must be non-negative, got {negative}")
        if abs(self.total - math.fsum(self.terms.values())) > 1e-12 * max(1.0, abs(self.total)):
            raise DomainError("bound total does not equal the sum of its terms")

    @classmethod
    def from_terms(cls, variant, terms, constants=None, source='exact', details=None):
        terms = {name: float(value) for name, value in terms.items()}
        return cls(variant=variant, terms=terms, total=math.fsum(terms.values()),
                   constants=constants, source=source, details=dict(details or {}))

    def to_dict(self):
        out = {
            'variant': self.variant,
            'terms': dict(self.terms),
            'total': self.total,
            'constants': None if self.constants is None else self.constants.to_dict(),
            'source': self.source,
        }
        if self.details:
            out['details'] = dict(self.details)
        return out


def _checked_sqrt(radicand, what):
    tol = get_tolerances()['radicand']
    if radicand < -tol:
        raise NegativeRadicand(
            f"{what} evaluated to {radicand:.3g} < 0; the cumulant input is not realisable"
        )
    return math.sqrt(max(radicand, 0.0))


def gstar_bracket(cum: CumulantVector, alpha1, alpha2):
    """
    The cumulant polynomial equal to E[(G/(a1 a2) + alpha13 Gamma_2 - Gamma_3)^2].

    Depends on the rates only; the shapes enter the bound through the
    variance and mean terms.
    """
    cum.require(range(2, 7))
    k2, k3, k4, k5, k6 = (cum.k(j) for j in range(2, 7))
    a = 1.0 / (alpha1 * alpha2)
    b = 1.0 / alpha1 - 1.0 / alpha2
    return (k6 / 120.0 - b * k5 / 12.0 + (b * b / 6.0 - a / 3.0) * k4 + b * k3 * a
            + k3 * k3 / 4.0 - b * k2 * k3 + a * a * k2 + b * b * k2 * k2)


def d3_bound_cumulants(cum: CumulantVector, params: BGParams):
    """Six-cumulant d3 bound between a second-chaos G and BG(a1, p1, a2, p2)"""
    constants = bound_constants(params)
    a1, p1, a2, p2 = params.as_tuple()
    root = _checked_sqrt(gstar_bracket(cum, a1, a2), "the six-cumulant expression")
    terms = {
        'moment_l2': constants.alpha12 / 3.0 * root,
        'variance': constants.alpha12 / 2.0 * abs((p1 + p2) / (a1 * a2) - cum.k(2)),
        'mean': constants.alpha12 * abs(p1 / a1 - p2 / a2),
    }
    return BoundReport.from_terms(BG_CUMULANT, terms, constants, source=cum.source)


def _svg_terms(cum, alpha, p):
    if not alpha > 1:
        raise BoundInapplicable(f"SVG and Laplace bounds need alpha > 1, got {alpha}")
    cum.require(range(2, 7))
    a2 = alpha * alpha
    c = a2 / (a2 - 1.0)
    radicand = cum.k(6) / 120.0 - cum.k(4) / (3.0 * a2) + cum.k(3) ** 2 / 4.0 + cum.k(2) / (a2 * a2)
    root = _checked_sqrt(radicand, "the SVG cumulant expression")
    terms = {
        'moment_l2': c / 3.0 * root,
        'variance': c / 2.0 * abs(2.0 * p / a2 - cum.k(2)),
        'mean': 0.0,
    }
    return terms, BoundConstants(alpha12=c, alpha13=0.0)


def d3_bound_family(cum: CumulantVector, family, *args):
    """
    Forms for the nested families:

        d3_bound_family(cum, VG, alpha1, alpha2, p)
        d3_bound_family(cum, SVG, alpha, p)
        d3_bound_family(cum, LAPLACE, alpha)
    """
    if family == VG:
        alpha1, alpha2, p = args
        constants = bound_constants(BGParams.vg(alpha1, alpha2, p))
        root = _checked_sqrt(gstar_bracket(cum, alpha1, alpha2), "the VG cumulant expression")
        terms = {
            'moment_l2': constants.alpha12 / 3.0 * root,
            'variance': constants.alpha12 / 2.0 * abs(2.0 * p / (alpha1 * alpha2) - cum.k(2)),
            'mean': p * constants.alpha12 * abs(constants.alpha13),
        }
        return BoundReport.from_terms(VG, terms, constants, source=cum.source)
    if family == SVG:
        alpha, p = args
        terms, constants = _svg_terms(cum, alpha, p)
        return BoundReport.from_terms(SVG, terms, constants, source=cum.source)
    if family == LAPLACE:
        (alpha,) = args
        terms, constants = _svg_terms(cum, alpha, 1.0)
        return BoundReport.from_terms(LAPLACE, terms, constants, source=cum.source)
    raise DomainError(f"unknown BG family {family}")


def d3_bound_normal(cum: CumulantVector, sigma2):
    """d3 bound to N(0, sigma^2), sigma > 1"""
    alpha = math.sqrt(sigma2) if sigma2 > 0 else 0.0
    if not alpha > 1:
        raise BoundInapplicable(f"the normal bound needs sigma > 1, got sigma^2 = {sigma2}")
    cum.require((2, 3, 6))
    root = _checked_sqrt(cum.k(6) / 120.0 + cum.k(3) ** 2 / 4.0, "kappa_6/120 + kappa_3^2/4")
    terms = {
        'moment_l2': root / 3.0,
        'variance': 0.5 * abs(sigma2 - cum.k(2)),
    }
    return BoundReport.from_terms(NORMAL, terms, source=cum.source)


def d3_bound_normal_gammaop(l1_gamma3, mean_gamma2, sigma2, mean_g=0.0):
    """Gamma-operator form of the normal bound: E|Gamma_3| / 3 + |sigma^2 - E Gamma_2| / 2 + |E G|"""
    if not sigma2 > 1:
        raise BoundInapplicable(f"the normal bound needs sigma > 1, got sigma^2 = {sigma2}")
    terms = {
        'moment_l1': l1_gamma3 / 3.0,
        'variance': 0.5 * abs(sigma2 - mean_gamma2),
        'mean': abs(mean_g),
    }
    return BoundReport.from_terms(NORMAL, terms, source='supplied')


def d3_bound_gamma_dist(kernel, alpha, p):
    """d3 bound to Ga(alpha, p) with the L1 term replaced by its L2 norm"""
    if not alpha > 1:
        raise BoundInapplicable(f"the gamma-target bound needs alpha > 1, got {alpha}")
    cum = chaos_cumulants(kernel)
    second_moment = (gamma_gamma_moment(cum, 2, 2) / alpha ** 2
                     - 2.0 * gamma_gamma_moment(cum, 2, 3) / alpha
                     + gamma_gamma_moment(cum, 3, 3))
    c = alpha / (alpha - 1.0)
    mean_g = 0.0
    terms = {
        'moment_l1': c / 3.0 * _checked_sqrt(second_moment, "E(Gamma_2/alpha - Gamma_3)^2"),
        'variance': c / 2.0 * abs(mean_g / alpha - cum.k(2)),
        'mean': c * abs(p / alpha - mean_g),
    }
    return BoundReport.from_terms(GAMMA_DIST, terms, source=cum.source)


def d3_bound_gammaop(params: BGParams, l1_term, mean_gamma2, mean_g=0.0, source='supplied', details=None):
    """
    Gamma-operator bound for any G with finite Gamma_2, Gamma_3:

        alpha12/3 * E|G/(a1 a2) + alpha13 Gamma_2 - Gamma_3|
        + alpha12/2 * |(p1 + p2)/(a1 a2) + alpha13 E G - E Gamma_2|
        + alpha12 * |E X - E G|

    l1_term is the expectation in the first line, however it was obtained.
    """
    if l1_term < 0:
        raise NegativeRadicand(f"an L1 norm cannot be negative, got {l1_term}")
    constants = bound_constants(params)
    a1, p1, a2, p2 = params.as_tuple()
    terms = {
        'moment_l1': constants.alpha12 / 3.0 * l1_term,
        'variance': constants.alpha12 / 2.0 * abs((p1 + p2) / (a1 * a2) + constants.alpha13 * mean_g - mean_gamma2),
        'mean': constants.alpha12 * abs(params.mean - mean_g),
    }
    return BoundReport.from_terms(BG_GAMMAOP_MC, terms, constants, source=source, details=details)


def d3_bound_gammaop_pathwise(kernel, params: BGParams, n, seed, n_batches=32):
    """
    Gamma-operator bound with the L1 term estimated over n Gaussian paths.

    details carries the Cauchy-Schwarz value used by the cumulant bound and the
    MC standard error of the pathwise L1 estimate, for comparison.
    """
    spec = spectrum(kernel)
    _, z = sample_chaos(spec, n, seed)
    residual = gstar_residual_paths(spec, z, params)
    l1 = batch_means(np.abs(residual), n_batches)
    cauchy_schwarz = math.sqrt(gstar_l2(kernel, params))
    logger.info("pathwise L1 %.6g (se %.2g) vs Cauchy-Schwarz %.6g", l1.estimate, l1.se, cauchy_schwarz)
    details = {
        'l1_pathwise': l1.estimate,
        'l1_se': l1.se,
        'l1_cauchy_schwarz': cauchy_schwarz,
        'n_paths': n,
        'seed': seed,
    }
    cum = chaos_cumulants(kernel)
    return d3_bound_gammaop(params, l1.estimate, mean_gamma2=cum.k(2), mean_g=0.0,
                            source='mc', details=details)


def _require_mean_zero(params):
    a1, p1, a2, p2 = params.as_tuple()
    if not math.isclose(p1 * a2, p2 * a1, rel_tol=1e-12, abs_tol=0.0):
        raise MeanNotZero(f"the decomposed bound needs p1*alpha2 = p2*alpha1 (got {p1 * a2} vs {p2 * a1})")


def decomposed_terms(cum_g: CumulantVector, params: BGParams):
    """The eleven addends of the decomposed bound, keyed by name"""
    constants = bound_constants(params)
    _require_mean_zero(params)
    cum_g.require(range(2, 7))
    cum_x = cumulants(params)
    a12, a13 = constants.alpha12, constants.alpha13
    a = params.alpha1 * params.alpha2
    d = {j: cum_g.k(j) - cum_x.k(j) for j in range(2, 7)}
    k23_gap = cum_g.k(2) * cum_g.k(3) - cum_x.k(2) * cum_x.k(3)
    sq = math.sqrt
    inner = {
        'kappa6': sq(abs(d[6])) / sq(120.0),
        'kappa5': sq(abs(a13)) / (2.0 * sq(3.0)) * sq(abs(d[5])),
        'kappa4': sq(abs(a13 ** 2 / 6.0 - 1.0 / (3.0 * a))) * sq(abs(d[4])),
        'kappa3': sq(abs(a13)) / sq(a) * sq(abs(d[3])),
        'kappa3_squared': 0.5 * abs(d[3]),
        'kappa3_cross': sq(abs(cum_x.k(3) * d[3])) / sq(2.0),
        'kappa23': sq(abs(a13)) * sq(abs(k23_gap)),
        'kappa2': sq(abs(d[2])) / a,
        'kappa2_squared': abs(a13) * abs(d[2]),
        'kappa2_cross': sq(2.0) * abs(a13) * sq(abs(cum_x.k(2) * d[2])),
    }
    terms = {name: a12 / 3.0 * value for name, value in inner.items()}
    terms['variance'] = a12 / 2.0 * abs(d[2])
    return terms, constants


def d3_bound_decomposed(cum_g: CumulantVector, params: BGParams):
    """BG_CUMULANT for a mean-zero target, split over kappa_j(G) - kappa_j(X)"""
    terms, constants = decomposed_terms(cum_g, params)
    return BoundReport.from_terms(DECOMPOSED, terms, constants, source=cum_g.source)


def invariance_term(rho, max_influence):
    """2 (30 rho)^2 sqrt(max_i Inf_i): cost of swapping Gaussian for general innovations"""
    if not np.isfinite(rho) or rho <= 0:
        raise BoundInapplicable(f"rho must be positive and finite, got {rho}")
    if max_influence < 0:
        raise BoundInapplicable(f"influence cannot be negative, got {max_influence}")
    return 2.0 * (30.0 * rho) ** 2 * math.sqrt(max_influence)


def d3_bound_homog(cum_g: CumulantVector, params: BGParams, rho, max_influence, details=None):
    """Homogeneous sum H_2(N, f, Y) against a mean-zero BG target"""
    terms, constants = decomposed_terms(cum_g, params)
    terms = {'invariance': invariance_term(rho, max_influence), **terms}
    details = {'rho': rho, 'max_influence': max_influence, **(details or {})}
    return BoundReport.from_terms(HOMOG_SUM, terms, constants, source=cum_g.source, details=details)


def homog_invariance_report(rho, max_influence, details=None):
    """HOMOG_SUM with no target: the invariance term alone"""
    terms = {'invariance': invariance_term(rho, max_influence)}
    details = {'rho': rho, 'max_influence': max_influence, 'target': None, **(details or {})}
    return BoundReport.from_terms(HOMOG_SUM, terms, details=details)


def laplace_constant_ratio(alpha):
    """Leading constant alpha^2/(3(alpha^2-1)) of the Laplace d3 bound vs 3 alpha^2 of the Wasserstein one"""
    if not alpha > 1:
        raise BoundInapplicable(f"the Laplace d3 bound needs alpha > 1, got {alpha}")
    ours = alpha ** 2 / (3.0 * (alpha ** 2 - 1.0))
    reference = LAPLACE_REFERENCE_FACTOR * alpha ** 2
    return {'alpha': alpha, 'd3_constant': ours, 'wasserstein_constant': reference,
            'ratio': ours / reference, 'sharper': ours < reference}


def lower_order_bound(d_r_bound, steps=1):
    """d_{r-1} <= 3 sqrt(2) sqrt(d_r), applied `steps` times"""
    if d_r_bound < 0:
        raise BoundInapplicable(f"a distance bound cannot be negative, got {d_r_bound}")
    if steps < 1:
        raise OrderOutOfRange(f"steps must be at least 1, got {steps}")
    value = float(d_r_bound)
    for _ in range(steps):
        value = 3.0 * math.sqrt(2.0) * math.sqrt(value)
    return value
