#!/usr/bin/env python3
"""
Stein operator for bilateral-gamma targets and a numerical Stein solver

The BG law is characterised by

    E[X f(X)] = E[ int f(X + u) u nu_bg(du) ]

with u nu_bg(du) = p1 e^{-a1 u} du on u > 0 and -p2 e^{-a2 |u|} du on u < 0.
stein_residual checks this identity by Monte Carlo.

solve_stein builds the solution of

    -x f(x) + int f(x + u) u nu_bg(du) = h(x) - E h(X)

as f_h = -int_0^inf (P_t h)'(x) dt, where P_t h(x) = E h(e^{-t} x + X_(t)) and
X_(t) has characteristic function phi(y) / phi(e^{-t} y). Everything runs on a
uniform periodic grid:

- the convolution with X_(t) is a multiplication in frequency space (FFT)
- the shrunk argument e^{-t} x is read off a cubic spline
- t is mapped to s = e^{-t}, so the time integral is int_0^1 g_s'(s x) ds,
  evaluated by Gauss-Legendre with the node count doubled until it settles

Test functions are tapered to zero over the outer `taper` fraction of the grid
before transforming; checks are made on the central half of the grid only.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy import signal, special
from scipy.interpolate import CubicSpline

from bg_core import BGParams, log_char_fn, sample
from bg_utils import get_quadrature_params, get_stein_params, get_tolerances
from errors import (DomainError, EmptyDictionary, GridTooCoarse, OrderOutOfRange,
                    QuadratureNotConverged)
from mc import EstimatorReport, batch_means, gauss_laguerre

logger = logging.getLogger(__name__)

MIN_GRID_POINTS = 256
MIN_WIDTH_SD = 12.0

SINE = 'sine'
LOGISTIC = 'logistic'
GAUSSIAN = 'gaussian'
ZERO = 'zero'

# ---------------------------------------------------------------------------
# Test functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TestFunction:
    """
    A smooth h with closed-form derivatives up to order 3.

    sine      h(x) = amplitude * sin(a x + b) / max(1, a)^3
    logistic  h(x) = amplitude * expit(a (x - b)),   a <= 2
    gaussian  h(x) = amplitude * exp(-x^2 / 2)       (not in W3: |h'''| peaks near 1.38)
    zero      h = 0
    """
    __test__ = False

    family: str
    a: float = 1.0
    b: float = 0.0
    amplitude: float = 1.0
    name: str = field(default='', compare=False)

    def __post_init__(self):
        if self.family not in (SINE, LOGISTIC, GAUSSIAN, ZERO):
            raise DomainError(f"unknown test-function family '{self.family}'")
        if not self.name:
            object.__setattr__(self, 'name', self._default_name())

    def _default_name(self):
        if self.family == SINE:
            label = f"sin_a{self.a:g}_b{self.b:.4g}"
        elif self.family == LOGISTIC:
            label = f"logistic_a{self.a:g}_c{self.b:g}"
        else:
            label = self.family
        return label if self.amplitude == 1.0 else f"{self.amplitude:g}*{label}"

    def scaled(self, c):
        return TestFunction(self.family, self.a, self.b, self.amplitude * c)

    def __call__(self, x):
        return self.derivative(x, 0)

    def derivative(self, x, k):
        if not 0 <= k <= 3:
            raise OrderOutOfRange(f"derivatives are available up to order 3, got {k}")
        x = np.asarray(x, dtype=float)
        if self.family == ZERO:
            return np.zeros_like(x)
        if self.family == SINE:
            scale = max(1.0, self.a) ** 3
            return self.amplitude * self.a ** k * np.sin(self.a * x + self.b + k * math.pi / 2.0) / scale
        if self.family == LOGISTIC:
            s = special.expit(self.a * (x - self.b))
            ds = s * (1.0 - s)
            poly = (s, ds, ds * (1.0 - 2.0 * s), ds * (1.0 - 6.0 * s + 6.0 * s * s))[k]
            return self.amplitude * self.a ** k * poly
        g = np.exp(-0.5 * x * x)
        poly = (1.0, -x, x * x - 1.0, 3.0 * x - x ** 3)[k]
        return self.amplitude * poly * g

    def sup_norms(self, x):
        """Measured sup |h^(k)| over the points x, k = 0..3"""
        return [float(np.max(np.abs(self.derivative(x, k)))) for k in range(4)]


def w3_dictionary():
    """Fixed W3 dictionary: 8 damped sines and 2 logistic ramps"""
    functions = [TestFunction(SINE, a, b) for a in (0.5, 1.0, 2.0, 4.0) for b in (0.0, math.pi / 3.0)]
    functions += [TestFunction(LOGISTIC, 1.0, 0.0), TestFunction(LOGISTIC, 2.0, 0.0)]
    return functions


def identity_functions():
    """Bounded test functions for the Monte-Carlo Stein identity"""
    return [
        TestFunction(GAUSSIAN),
        TestFunction(SINE, 1.0, 0.0),
        TestFunction(SINE, 0.5, math.pi / 3.0),
        TestFunction(LOGISTIC, 1.0, 0.0),
        TestFunction(SINE, 2.0, 0.0),
    ]


# ---------------------------------------------------------------------------
# Levy integral and the Monte-Carlo identity
# ---------------------------------------------------------------------------


def levy_integral(params: BGParams, f, x, n_nodes=None):
    """
    int f(x + u) u nu_bg(du) by Gauss-Laguerre on each half-line:

        p1/a1 sum_k w_k f(x + v_k/a1) - p2/a2 sum_k w_k f(x - v_k/a2)

    Accurate when f oscillates slowly on the scale 1/alpha.
    """
    if n_nodes is None:
        n_nodes = get_quadrature_params()['laguerre_nodes']
    nodes, weights = gauss_laguerre(n_nodes)
    a1, p1, a2, p2 = params.as_tuple()
    x = np.asarray(x, dtype=float)
    positive = np.zeros_like(x)
    negative = np.zeros_like(x)
    for v, w in zip(nodes, weights):
        positive += w * f(x + v / a1)
        negative += w * f(x - v / a2)
    return p1 / a1 * positive - p2 / a2 * negative


def stein_residual(params: BGParams, n_samples, seed, f, n_nodes=None, n_batches=32):
    """Estimate E[X f(X) - int f(X + u) u nu_bg(du)] (zero for the BG law)"""
    draws = sample(params, n_samples, seed)
    per_sample = draws * f(draws) - levy_integral(params, f, draws, n_nodes)
    report = batch_means(per_sample, n_batches)
    return EstimatorReport(estimate=report.estimate, se=report.se, n=report.n,
                           details={'function': getattr(f, 'name', repr(f)), 'seed': seed})


# ---------------------------------------------------------------------------
# Grid
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SteinGrid:
    x_min: float
    x_max: float
    n_x: int
    s_nodes: np.ndarray
    s_weights: np.ndarray
    taper: float = 0.25

    def __post_init__(self):
        if self.n_x < MIN_GRID_POINTS or self.n_x & (self.n_x - 1):
            raise GridTooCoarse(f"n_x must be a power of two >= {MIN_GRID_POINTS}, got {self.n_x}")
        if not self.x_max > self.x_min:
            raise DomainError(f"empty grid range [{self.x_min}, {self.x_max}]")
        if not 0 < self.taper < 1:
            raise DomainError(f"taper fraction must be in (0, 1), got {self.taper}")

    @classmethod
    def for_params(cls, params: BGParams, n_x=None, width_sd=None, n_time=None, taper=None):
        """Grid around the BG mean, width_sd standard deviations each side, always containing 0"""
        settings = get_stein_params()
        n_x = n_x or settings['n_x']
        width_sd = width_sd or settings['width_sd']
        taper = taper if taper is not None else settings['taper']
        n_time = n_time or get_quadrature_params()['time_nodes']
        if width_sd < MIN_WIDTH_SD:
            raise GridTooCoarse(f"the grid must span at least {MIN_WIDTH_SD:g} standard deviations, got {width_sd}")
        half = width_sd * math.sqrt(params.variance)
        x_min = min(params.mean - half, -0.25 * half)
        x_max = max(params.mean + half, 0.25 * half)
        s_nodes, s_weights = time_quadrature(n_time)
        return cls(x_min, x_max, int(n_x), s_nodes, s_weights, taper)

    def with_time_nodes(self, n_time):
        s_nodes, s_weights = time_quadrature(n_time)
        return SteinGrid(self.x_min, self.x_max, self.n_x, s_nodes, s_weights, self.taper)

    def refined(self):
        return SteinGrid(self.x_min, self.x_max, 2 * self.n_x, self.s_nodes, self.s_weights, self.taper)

    @property
    def dx(self):
        return (self.x_max - self.x_min) / (self.n_x - 1)

    @property
    def x(self):
        return self.x_min + self.dx * np.arange(self.n_x)

    @property
    def freqs(self):
        return 2.0 * math.pi * np.fft.fftfreq(self.n_x, d=self.dx)

    @property
    def n_time(self):
        return self.s_nodes.size

    def central(self):
        """Boolean mask of the central half of the grid"""
        index = np.arange(self.n_x)
        return (index >= self.n_x // 4) & (index < 3 * self.n_x // 4)

    def covers(self, params: BGParams):
        sd = math.sqrt(params.variance)
        return self.x_min <= params.mean - MIN_WIDTH_SD * sd and self.x_max >= params.mean + MIN_WIDTH_SD * sd

    def window(self):
        """C^3 edge taper, exactly 1 away from the outer `taper` fraction"""
        x = self.x
        ramp = self.taper * 0.5 * (self.x_max - self.x_min)
        left = np.clip((x - self.x_min) / ramp, 0.0, 1.0)
        right = np.clip((x[-1] - x) / ramp, 0.0, 1.0)
        return _smootherstep(left) * _smootherstep(right)

    def to_dict(self):
        return {'x_min': self.x_min, 'x_max': self.x_max, 'n_x': self.n_x,
                'n_time': self.n_time, 'taper': self.taper}


def _smootherstep(t):
    # first three derivatives vanish at t = 0 and t = 1
    return t ** 4 * (35.0 - 84.0 * t + 70.0 * t ** 2 - 20.0 * t ** 3)


def time_quadrature(n):
    """Gauss-Legendre nodes/weights on s in (0, 1), s = e^{-t}"""
    if n < 1:
        raise OrderOutOfRange(f"time quadrature needs at least one node, got {n}")
    nodes, weights = special.roots_legendre(int(n))
    return 0.5 * (nodes + 1.0), 0.5 * weights


def grid_values(h, grid: SteinGrid, tapered=True):
    values = h(grid.x) if callable(h) else np.asarray(h, dtype=float)
    if values.shape != (grid.n_x,):
        raise GridTooCoarse(f"grid function has shape {values.shape}, grid has {grid.n_x} points")
    return values * grid.window() if tapered else values


def _check_resolution(spectrum_values):
    power = np.abs(spectrum_values) ** 2
    total = float(np.sum(power))
    if total == 0.0:
        return
    k = np.abs(np.fft.fftfreq(power.size))
    top = float(np.sum(power[k >= 0.5 * 7.0 / 8.0]))
    tol = get_tolerances()['parseval']
    if top > tol * total:
        raise GridTooCoarse(
            f"{top / total:.2e} of the spectral energy sits in the top frequency band; refine the grid"
        )


# ---------------------------------------------------------------------------
# Semigroup
# ---------------------------------------------------------------------------


def phi_t(params: BGParams, t, y):
    """phi(y) / phi(e^{-t} y): characteristic function of X_(t)"""
    if t < 0:
        raise DomainError(f"t must be non-negative, got {t}")
    y_arr = np.asarray(y, dtype=float)
    value = np.exp(log_char_fn(params, y_arr) - log_char_fn(params, math.exp(-t) * y_arr))
    if np.ndim(value) == 0:
        return complex(value)
    return value


def _shrunk_convolution(params, transformed, grid, s, order):
    """order-th x-derivative of x -> E h(s x + X_(t)) on the grid, s = e^{-t}"""
    y = grid.freqs
    multiplier = np.exp(log_char_fn(params, y) - log_char_fn(params, s * y))
    if order:
        multiplier = multiplier * (1j * y) ** order
    g = np.real(np.fft.ifft(transformed * multiplier))
    if s == 1.0:
        return g
    return CubicSpline(grid.x, g)(s * grid.x)


def semigroup_apply(params: BGParams, t, h_values, grid: SteinGrid):
    """(P_t h)(x) on the grid for a grid function h"""
    if t < 0:
        raise DomainError(f"t must be non-negative, got {t}")
    values = grid_values(h_values, grid, tapered=False)
    transformed = np.fft.fft(values)
    _check_resolution(transformed)
    return _shrunk_convolution(params, transformed, grid, math.exp(-t), 0)


def _gradient(values, grid):
    return np.gradient(values, grid.dx, edge_order=2)


def _exponential_tail(values, dx, alpha):
    """
    int_0^inf g(x_j + u) e^{-alpha u} du for every grid point, g linear between
    grid points and held at its last value beyond the grid.
    """
    q = math.exp(-alpha * dx)
    c0 = (1.0 - q) / alpha
    c1 = (1.0 - q * (1.0 + alpha * dx)) / (alpha * alpha * dx)
    cells = values[:-1] * (c0 - c1) + values[1:] * c1
    last = values[-1] / alpha
    # I_j = cells_j + q I_{j+1}, run backwards from the last point
    swept, _ = signal.lfilter([1.0], [1.0, -q], cells[::-1], zi=[q * last])
    out = np.empty_like(values)
    out[:-1] = swept[::-1]
    out[-1] = last
    return out


def levy_integral_grid(params: BGParams, values, grid: SteinGrid):
    """int g(x + u) u nu_bg(du) at every grid point, nearest-value extension outside"""
    a1, p1, a2, p2 = params.as_tuple()
    values = np.asarray(values, dtype=float)
    forward = _exponential_tail(values, grid.dx, a1)
    backward = _exponential_tail(values[::-1], grid.dx, a2)[::-1]
    return p1 * forward - p2 * backward


def levy_integral_spline(params: BGParams, values, grid: SteinGrid, n_nodes=None):
    """Same integral by Gauss-Laguerre on a clamped cubic spline of the grid function"""
    spline = CubicSpline(grid.x, values)

    def clamped(points):
        return spline(np.clip(points, grid.x_min, grid.x_max))

    return levy_integral(params, clamped, grid.x, n_nodes)


def generator_apply(params: BGParams, h_values, grid: SteinGrid):
    """L h = -x h' + int h'(x + u) u nu_bg(du), h' by finite differences"""
    values = grid_values(h_values, grid, tapered=False)
    derivative = _gradient(values, grid)
    return -grid.x * derivative + levy_integral_grid(params, derivative, grid)


def expectation(params: BGParams, h, grid: SteinGrid, method='quadrature', n_samples=None, seed=None):
    """
    E h(X) for X ~ BG.

    'quadrature' convolves the tapered grid values with the BG law in frequency
    space and reads the result at 0; 'mc' averages h over exact BG draws.
    """
    if method == 'quadrature':
        values = grid_values(h, grid)
        g = np.real(np.fft.ifft(np.fft.fft(values) * np.exp(log_char_fn(params, grid.freqs))))
        return EstimatorReport(estimate=float(CubicSpline(grid.x, g)(0.0)), se=0.0, n=grid.n_x,
                               details={'method': method})
    if method == 'mc':
        if n_samples is None or seed is None:
            raise DomainError("the Monte-Carlo expectation needs n_samples and seed")
        report = batch_means(h(sample(params, n_samples, seed)))
        return EstimatorReport(estimate=report.estimate, se=report.se, n=report.n,
                               details={'method': method, 'seed': seed})
    raise DomainError(f"unknown expectation method '{method}'")


# ---------------------------------------------------------------------------
# Solver
# ---------------------------------------------------------------------------


def _solve_once(params, transformed, grid):
    total = np.zeros(grid.n_x)
    for s, w in zip(grid.s_nodes, grid.s_weights):
        total += w * _shrunk_convolution(params, transformed, grid, float(s), 1)
    return -total


def solve_stein(params: BGParams, h, grid: SteinGrid, max_time_nodes=None):
    """
    f_h on the grid for a test function h (or its grid values).

    The number of time nodes is doubled, starting from grid.n_time, until two
    successive solutions agree on the central half of the grid within the
    quadrature tolerance times sup |h|. The last solution is returned;
    QuadratureNotConverged is raised once doubling would exceed max_time_nodes
    (default from [quadrature] max_time_nodes).
    """
    if not grid.covers(params):
        raise GridTooCoarse(f"grid [{grid.x_min:.4g}, {grid.x_max:.4g}] does not cover mean +/- 12 sd")
    values = grid_values(h, grid)
    transformed = np.fft.fft(values)
    _check_resolution(transformed)
    if max_time_nodes is None:
        max_time_nodes = get_quadrature_params()['max_time_nodes']

    tol = get_tolerances()['quadrature'] * float(np.max(np.abs(values)))
    mask = grid.central()
    current = grid
    previous = _solve_once(params, transformed, current)
    change = math.inf
    while True:
        if 2 * current.n_time > max_time_nodes:
            raise QuadratureNotConverged(
                f"time integral not converged at {current.n_time} nodes "
                f"(last change {change:.2e}, tolerance {tol:.2e}, limit {max_time_nodes})"
            )
        current = current.with_time_nodes(2 * current.n_time)
        latest = _solve_once(params, transformed, current)
        change = float(np.max(np.abs(latest - previous)[mask]))
        if change <= tol:
            break
        previous = latest
    logger.debug("solved Stein equation for %s on %d points with %d time nodes (change %.2e)",
                 getattr(h, 'name', 'grid function'), grid.n_x, current.n_time, change)
    return latest


def stein_operator(params: BGParams, f_values, grid: SteinGrid, method='grid', n_nodes=None):
    """-x f(x) + int f(x + u) u nu_bg(du) for a grid function f"""
    if method == 'grid':
        levy = levy_integral_grid(params, f_values, grid)
    elif method == 'laguerre':
        levy = levy_integral_spline(params, f_values, grid, n_nodes)
    else:
        raise DomainError(f"unknown Levy-integral method '{method}'")
    return -grid.x * f_values + levy


def verify_solution(params: BGParams, f_values, h, grid: SteinGrid, method='grid', n_nodes=None):
    """sup over the central half of |A f_h - h + E h(X)|"""
    mean_h = expectation(params, h, grid).estimate
    target = grid_values(h, grid) - mean_h
    residual = stein_operator(params, np.asarray(f_values, dtype=float), grid, method, n_nodes) - target
    return float(np.max(np.abs(residual[grid.central()])))


def derivative_sup_norms(f_values, grid: SteinGrid):
    """sup |f|, |f'|, |f''| on the central half, derivatives by finite differences"""
    f_values = np.asarray(f_values, dtype=float)
    first = _gradient(f_values, grid)
    second = _gradient(first, grid)
    mask = grid.central()
    return {
        'f': float(np.max(np.abs(f_values[mask]))),
        'f1': float(np.max(np.abs(first[mask]))),
        'f2': float(np.max(np.abs(second[mask]))),
    }


DERIVATIVE_BOUNDS = {'f': 1.0, 'f1': 0.5, 'f2': 1.0 / 3.0}


def check_derivative_bounds(norms, slack=5e-3):
    """Compare measured sup-norms with 1, 1/2, 1/3"""
    return {name: norms[name] <= bound + slack for name, bound in DERIVATIVE_BOUNDS.items()}


def grid_frame(grid: SteinGrid, **columns):
    """DataFrame with an x column plus one column per grid function"""
    frame = pd.DataFrame({'x': grid.x})
    for name, values in columns.items():
        frame[name] = np.asarray(values, dtype=float)
    return frame


def solve_dictionary(params: BGParams, grid: SteinGrid, dictionary=None):
    """Solve for every dictionary member; returns {name: (f_h values, residual, norms)}"""
    functions = list(dictionary if dictionary is not None else w3_dictionary())
    if not functions:
        raise EmptyDictionary("no test functions to solve for")
    results = {}
    for h in functions:
        f_h = solve_stein(params, h, grid)
        results[h.name] = (f_h, verify_solution(params, f_h, h, grid), derivative_sup_norms(f_h, grid))
    return results
