#!/usr/bin/env python3
"""
Reproducible experiments for bilateral-gamma approximation on the second chaos

Subcommands:
1. cumulants  - exact cumulants of a BG target and/or a chaos kernel, optional MC estimates
2. bound      - any d3 bound variant as a JSON BoundReport, optional MC bracket check
                (dictionary lower bound and empirical W1)
3. stein      - Stein identity residuals, semigroup checks, solved f_h grids with
                derivative sup-norm checks
4. converge   - bound / W1 trajectories along a sequence of chaos elements
                (families: bg, clt, ustat)

Every report embeds the resolved configuration and seed. A JSON file given
with --config overrides the command-line flags. Errors map to exit codes:
2 config, 3 parameters, 4 bound applicability, 5 numerics, 6 sampling.
"""

import argparse
import json
import logging
import math
import os
import sys
import traceback

import numpy as np
import pandas as pd

import bounds
from bg_core import BGParams, CumulantVector, cumulants, sample, validate
from bg_utils import (get_mc_params, get_output_dir, get_quadrature_params, get_stein_params,
                      write_csv, write_json_report)
from chaos import (Spectrum, bg_matching_spectrum, chaos_cumulants, clt_spectrum, interpolated_spectrum,
                   read_kernel, sample_chaos, spectrum)
from errors import BGChaosError, ConfigInvalid, DomainError
from homog import (DISPLAYED, INFLUENCE_CONVENTIONS, WORKED, HomogSumSpec, InnovationLaw, bridge_kernel,
                   max_influence, sample_homog, ustat_kernel)
from mc import MCConfig, sample_cumulants, smooth_w3_lower_bound, wasserstein1_empirical
from stein import (GAUSSIAN, SteinGrid, TestFunction, check_derivative_bounds, expectation, grid_frame,
                   identity_functions, semigroup_apply, solve_dictionary, stein_residual, w3_dictionary)

logger = logging.getLogger('run_experiment')

VARIANT_CHOICES = {
    'bg': bounds.BG_CUMULANT,
    'gammaop': bounds.BG_GAMMAOP_MC,
    'vg': bounds.VG,
    'svg': bounds.SVG,
    'laplace': bounds.LAPLACE,
    'normal': bounds.NORMAL,
    'gamma': bounds.GAMMA_DIST,
    'decomposed': bounds.DECOMPOSED,
    'homog': bounds.HOMOG_SUM,
}

DEFAULT_CHECKPOINTS = {
    'bg': '5',
    'clt': '1,4,16,64',
    'ustat': '10,20,40,80,160,320',
}

SE_MULTIPLIER = 5.0
W1_RATIO_MIN = 3.0


# ---------------------------------------------------------------------------
# Console helpers
# ---------------------------------------------------------------------------


def banner(title, *lines):
    print("\n" + "=" * 80)
    print(title)
    for line in lines:
        print(line)
    print("=" * 80)


def status(ok, text):
    print(f"  {'✓' if ok else '✗'} {text}")


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def parse_params(value):
    if value is None:
        return None
    if isinstance(value, BGParams):
        return value
    if isinstance(value, (list, tuple)):
        if len(value) != 4:
            raise ConfigInvalid(f"expected four BG parameters, got {value}")
        return BGParams(*[float(v) for v in value])
    return BGParams.from_string(value)


def parse_floats(value, what):
    if value is None:
        return None
    if isinstance(value, (list, tuple)):
        items = list(value)
    else:
        items = [part for part in str(value).split(',') if part.strip()]
    try:
        return [float(item) for item in items]
    except ValueError:
        raise ConfigInvalid(f"{what} must be comma-separated numbers, got '{value}'")


def parse_ints(value, what):
    values = parse_floats(value, what)
    if any(v != int(v) or v < 1 for v in values):
        raise ConfigInvalid(f"{what} must be positive integers, got '{value}'")
    return [int(v) for v in values]


def apply_config_file(args):
    """Overlay the keys of the --config JSON file on the parsed flags"""
    if not args.config:
        return args
    if not os.path.isfile(args.config):
        raise ConfigInvalid(f"config file not found: {args.config}")
    try:
        with open(args.config) as handle:
            overrides = json.load(handle)
    except json.JSONDecodeError as e:
        raise ConfigInvalid(f"config file {args.config} is not valid JSON: {e}")
    if not isinstance(overrides, dict):
        raise ConfigInvalid(f"config file {args.config} must hold a JSON object")
    for key, value in overrides.items():
        attr = key.replace('-', '_')
        if attr in ('command', 'func', 'config') or not hasattr(args, attr):
            raise ConfigInvalid(f"unknown key '{key}' in {args.config} for '{args.command}'")
        setattr(args, attr, value)
    return args


def resolve_seed(args):
    return int(args.seed) if args.seed is not None else get_mc_params()['seed']


def resolved_config(args, seed):
    """Everything needed to rerun the experiment"""
    flags = {key: value for key, value in vars(args).items() if key != 'func'}
    return {
        'flags': flags,
        'seed': seed,
        'monte_carlo': get_mc_params(),
        'quadrature': get_quadrature_params(),
        'stein': get_stein_params(),
    }


def report_path(args, default_name):
    if args.output:
        return args.output
    return os.path.join(args.output_dir or get_output_dir(), default_name)


def output_path(args, name):
    directory = args.output_dir or os.path.dirname(os.path.abspath(report_path(args, name)))
    return os.path.join(directory, name)


def mc_config(args, seed, n_samples):
    return MCConfig(n_samples=int(n_samples), seed=seed,
                    n_batches=int(args.n_batches or get_mc_params()['n_batches']))


def load_chaos_kernel(args):
    """Kernel from --kernel, --spectrum or --ustat; None if none was given"""
    sources = [name for name in ('kernel', 'spectrum', 'ustat') if getattr(args, name, None) is not None]
    if len(sources) > 1:
        raise ConfigInvalid(f"give only one of --kernel, --spectrum, --ustat (got {', '.join(sources)})")
    if getattr(args, 'kernel', None) is not None:
        return read_kernel(args.kernel)
    if getattr(args, 'spectrum', None) is not None:
        return Spectrum.from_values(parse_floats(args.spectrum, 'spectrum')).to_kernel()
    if getattr(args, 'ustat', None) is not None:
        return bridge_kernel(ustat_kernel(int(args.ustat)))
    return None


def add_common(parser):
    parser.add_argument('--config', help='JSON file whose keys override these flags')
    parser.add_argument('--seed', type=int, help='RNG seed (default: BG_SEED or config.ini)')
    parser.add_argument('--n-batches', type=int, help='batches for batch-means standard errors')
    parser.add_argument('--output', help='path of the JSON report')
    parser.add_argument('--output-dir', help='directory for reports and CSV files')


def build_parser():
    parser = argparse.ArgumentParser(
        description='Bilateral-gamma approximation experiments on the second Wiener chaos',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Exact cumulants of the Laplace(2) target
  python run_experiment.py cumulants --bg 2,1,2,1

  # Exact and Monte-Carlo cumulants of a kernel file
  python run_experiment.py cumulants --kernel k.txt --mc 1000000

  # Normal-target bound for a kernel
  python run_experiment.py bound --variant normal --sigma2 4 --kernel k.txt

  # Invariance term for the U-statistic with Rademacher innovations, then the full bound
  python run_experiment.py bound --variant homog --ustat 100 --innovation rademacher
  python run_experiment.py bound --variant homog --ustat 100 --innovation rademacher --bg 2,1,2,1

  # Stein identity only
  python run_experiment.py stein --bg 2,1,2,1 --identity-only

  # CLT trajectory
  python run_experiment.py converge --family clt --mc 100000
        """
    )
    parser.add_argument('--verbose', action='store_true', help='log progress at INFO level')
    subparsers = parser.add_subparsers(dest='command', required=True)

    p_cum = subparsers.add_parser('cumulants', help='exact and estimated cumulants')
    add_common(p_cum)
    p_cum.add_argument('--bg', help="target parameters 'a1,p1,a2,p2'")
    p_cum.add_argument('--kernel', help='kernel text file')
    p_cum.add_argument('--spectrum', help="comma-separated eigenvalues (use --spectrum=... for negatives)")
    p_cum.add_argument('--mc', type=int, help='number of Monte-Carlo draws for estimated cumulants')
    p_cum.set_defaults(func=cmd_cumulants)

    p_bound = subparsers.add_parser('bound', help='d3 bound report')
    add_common(p_bound)
    p_bound.add_argument('--variant', required=True, choices=sorted(VARIANT_CHOICES))
    p_bound.add_argument('--bg', help="target parameters 'a1,p1,a2,p2'")
    p_bound.add_argument('--kernel', help='kernel text file')
    p_bound.add_argument('--spectrum', help='comma-separated eigenvalues')
    p_bound.add_argument('--ustat', type=int, help='use the U-statistic table of this size')
    p_bound.add_argument('--cumulants', help='literal kappa_1..kappa_6 instead of a kernel')
    p_bound.add_argument('--sigma2', type=float, help='variance of the normal target')
    p_bound.add_argument('--alpha', type=float, help='rate of the gamma target')
    p_bound.add_argument('--p', type=float, help='shape of the gamma target')
    p_bound.add_argument('--innovation', default='standard-normal', help='innovation law for homog')
    p_bound.add_argument('--rho', type=float, help='E|Y|^3 for a user-moments innovation law')
    p_bound.add_argument('--influence', choices=INFLUENCE_CONVENTIONS,
                         help='influence convention (default: worked for --ustat, displayed otherwise)')
    p_bound.add_argument('--mc', type=int, help='draws for the MC bracket check (and pathwise Gamma terms)')
    p_bound.set_defaults(func=cmd_bound)

    p_stein = subparsers.add_parser('stein', help='Stein identity and solver checks')
    add_common(p_stein)
    p_stein.add_argument('--bg', default='2,1,2,1', help="target parameters 'a1,p1,a2,p2'")
    p_stein.add_argument('--identity-only', action='store_true', help='only the MC Stein identity table')
    p_stein.add_argument('--n-samples', type=int, help='MC draws for the identity and limit checks')
    p_stein.add_argument('--n-x', type=int, help='grid size (power of two)')
    p_stein.add_argument('--laguerre-nodes', type=int, help='Gauss-Laguerre nodes for the identity')
    p_stein.set_defaults(func=cmd_stein)

    p_conv = subparsers.add_parser('converge', help='bound trajectories along a sequence')
    add_common(p_conv)
    p_conv.add_argument('--family', required=True, choices=sorted(DEFAULT_CHECKPOINTS))
    p_conv.add_argument('--bg', help="target parameters 'a1,p1,a2,p2' (bg default 2,1,2,1)")
    p_conv.add_argument('--checkpoints', help='bg: number of checkpoints; clt: pair counts; ustat: sizes')
    p_conv.add_argument('--sigma2', type=float, default=4.0, help='variance of the clt target')
    p_conv.add_argument('--innovation', default='standard-normal', help='innovation law for ustat')
    p_conv.add_argument('--mc', type=int,
                        help='draws per checkpoint for W1 and the dictionary lower bound (bg default: n_samples; 0 skips)')
    p_conv.set_defaults(func=cmd_converge)
    return parser


# ---------------------------------------------------------------------------
# cumulants
# ---------------------------------------------------------------------------


def agreement(exact, estimated, orders=range(2, 7)):
    rows = {}
    for j in orders:
        se = estimated.standard_error(j)
        gap = estimated.k(j) - exact.k(j)
        rows[str(j)] = {'gap': gap, 'se': se, 'within_5se': abs(gap) <= SE_MULTIPLIER * se}
    return rows


def cmd_cumulants(args):
    seed = resolve_seed(args)
    params = parse_params(args.bg)
    kernel = load_chaos_kernel(args)
    if params is None and kernel is None:
        raise ConfigInvalid("cumulants needs --bg, --kernel or --spectrum")

    banner("CUMULANTS", f"Target: {params.to_dict() if params else '-'}",
           f"Kernel: {kernel.dim if kernel else '-'} dims", f"Seed: {seed}")
    report = {'command': 'cumulants', 'config': resolved_config(args, seed)}

    if params is not None:
        exact = cumulants(params)
        report['target'] = {'params': params.to_dict(), 'family': validate(params), **exact.to_dict()}
        print("\nTarget cumulants:")
        for j in range(1, 7):
            print(f"  kappa_{j} = {exact.k(j):.12g}")
        if args.mc:
            estimated = sample_cumulants(sample(params, args.mc, seed), 6, mc_config(args, seed, args.mc))
            report['target']['mc'] = estimated.to_dict()
            report['target']['agreement'] = agreement(exact, estimated)

    if kernel is not None:
        exact = chaos_cumulants(kernel)
        report['kernel'] = {'dim': kernel.dim, **exact.to_dict()}
        print("\nKernel cumulants (trace and contraction routes agree):")
        for j in range(2, 7):
            print(f"  kappa_{j} = {exact.k(j):.12g}")
        if args.mc:
            samples, _ = sample_chaos(spectrum(kernel), args.mc, seed, keep_paths=False)
            estimated = sample_cumulants(samples, 6, mc_config(args, seed, args.mc))
            report['kernel']['mc'] = estimated.to_dict()
            report['kernel']['agreement'] = agreement(exact, estimated)

    for part in ('target', 'kernel'):
        for j, row in report.get(part, {}).get('agreement', {}).items():
            status(row['within_5se'], f"{part} kappa_{j}: gap {row['gap']:.3e} (se {row['se']:.2e})")

    path = write_json_report(report_path(args, 'cumulants_report.json'), report)
    print(f"\n✓ Report written to {path}")
    return report


# ---------------------------------------------------------------------------
# bound
# ---------------------------------------------------------------------------


def _chaos_cumulant_input(args, kernel):
    if args.cumulants is not None:
        values = parse_floats(args.cumulants, 'cumulants')
        if len(values) != 6:
            raise ConfigInvalid(f"--cumulants needs kappa_1..kappa_6, got {len(values)} values")
        return CumulantVector(tuple(values), source='supplied')
    if kernel is None:
        raise ConfigInvalid("this bound needs --kernel, --spectrum, --ustat or --cumulants")
    return chaos_cumulants(kernel)


def _require_params(args):
    params = parse_params(args.bg)
    if params is None:
        raise ConfigInvalid(f"the {args.variant} bound needs a target: --bg a1,p1,a2,p2")
    return params


def _require_kernel(args, kernel):
    if kernel is None:
        raise ConfigInvalid(f"the {args.variant} bound needs --kernel, --spectrum or --ustat")
    return kernel


def _require_family(params, allowed, variant):
    family = validate(params)
    if family not in allowed:
        raise DomainError(f"the {variant} bound needs a {'/'.join(allowed)} target, got {family}")


def compute_bound(args, kernel, seed):
    """Dispatch one bound variant; returns (BoundReport, target sampler or None)"""
    variant = VARIANT_CHOICES[args.variant]

    if variant == bounds.NORMAL:
        if args.sigma2 is None:
            raise ConfigInvalid("the normal bound needs --sigma2")
        sigma = math.sqrt(args.sigma2)
        report = bounds.d3_bound_normal(_chaos_cumulant_input(args, kernel), args.sigma2)
        return report, lambda n, s: np.random.default_rng(s).normal(0.0, sigma, size=n)

    if variant == bounds.GAMMA_DIST:
        if args.alpha is None or args.p is None:
            raise ConfigInvalid("the gamma bound needs --alpha and --p")
        report = bounds.d3_bound_gamma_dist(_require_kernel(args, kernel), args.alpha, args.p)
        return report, lambda n, s: np.random.default_rng(s).gamma(args.p, 1.0 / args.alpha, size=n)

    if variant == bounds.HOMOG_SUM and args.bg is None:
        spec, convention = _homog_spec(args, kernel)
        report = bounds.homog_invariance_report(spec.innovation.rho, max_influence(spec, convention),
                                                details={'influence_convention': convention,
                                                         'innovation': spec.innovation.tag})
        return report, None

    params = _require_params(args)
    target = lambda n, s: sample(params, n, s)  # noqa: E731

    if variant == bounds.BG_CUMULANT:
        return bounds.d3_bound_cumulants(_chaos_cumulant_input(args, kernel), params), target
    if variant == bounds.VG:
        _require_family(params, ('VG', 'SVG', 'LAPLACE'), 'VG')
        cum = _chaos_cumulant_input(args, kernel)
        return bounds.d3_bound_family(cum, bounds.VG, params.alpha1, params.alpha2, params.p1), target
    if variant == bounds.SVG:
        _require_family(params, ('SVG', 'LAPLACE'), 'SVG')
        return bounds.d3_bound_family(_chaos_cumulant_input(args, kernel), bounds.SVG,
                                      params.alpha1, params.p1), target
    if variant == bounds.LAPLACE:
        _require_family(params, ('LAPLACE',), 'Laplace')
        return bounds.d3_bound_family(_chaos_cumulant_input(args, kernel), bounds.LAPLACE, params.alpha1), target
    if variant == bounds.DECOMPOSED:
        return bounds.d3_bound_decomposed(_chaos_cumulant_input(args, kernel), params), target
    if variant == bounds.BG_GAMMAOP_MC:
        n_paths = args.mc or get_mc_params()['n_samples']
        report = bounds.d3_bound_gammaop_pathwise(_require_kernel(args, kernel), params, n_paths, seed,
                                                  n_batches=args.n_batches or 32)
        return report, target

    # homogeneous sum
    spec, convention = _homog_spec(args, kernel)
    influence_value = max_influence(spec, convention)
    report = bounds.d3_bound_homog(chaos_cumulants(kernel), params, spec.innovation.rho, influence_value,
                                   details={'influence_convention': convention, 'innovation': spec.innovation.tag})
    return report, target


def _homog_spec(args, kernel):
    kernel = _require_kernel(args, kernel)
    innovation = InnovationLaw.from_tag(args.innovation, args.rho)
    convention = args.influence or (WORKED if args.ustat is not None else DISPLAYED)
    return HomogSumSpec(np.array(kernel.coeffs), innovation), convention


def bracket_check(kernel, report, target, n, seed):
    """Dictionary lower bound and empirical W1 between G and target draws"""
    g_samples, _ = sample_chaos(spectrum(kernel), n, seed, keep_paths=False)
    x_samples = target(n, seed + 1)
    lower = smooth_w3_lower_bound(g_samples, x_samples, w3_dictionary())
    return {
        'n_samples': n,
        'w1_empirical': wasserstein1_empirical(g_samples, x_samples),
        'dictionary_lower_bound': lower.to_dict(),
        'bracket_ok': lower.estimate <= report.total + SE_MULTIPLIER * lower.se,
    }


def cmd_bound(args):
    seed = resolve_seed(args)
    kernel = load_chaos_kernel(args)
    banner("D3 BOUND", f"Variant: {VARIANT_CHOICES[args.variant]}", f"Seed: {seed}")

    report, target = compute_bound(args, kernel, seed)
    print("\nTerms:")
    for name, value in report.terms.items():
        print(f"  {name:<16} {value:.6e}")
    print(f"  {'TOTAL':<16} {report.total:.6e}")

    result = {'command': 'bound', 'config': resolved_config(args, seed), 'bound': report.to_dict()}
    if args.mc and kernel is not None and target is not None:
        check = bracket_check(kernel, report, target, int(args.mc), seed)
        result['mc'] = check
        status(check['bracket_ok'],
               f"dictionary lower bound {check['dictionary_lower_bound']['estimate']:.4e} "
               f"<= bound {report.total:.4e} (+5 se); W1 {check['w1_empirical']:.4e}")

    path = write_json_report(report_path(args, 'bound_report.json'), result)
    print(f"\n✓ Report written to {path}")
    return result


# ---------------------------------------------------------------------------
# stein
# ---------------------------------------------------------------------------


def stein_identity_table(params, n_samples, seed, n_nodes):
    rows = []
    for h in identity_functions():
        estimate = stein_residual(params, n_samples, seed, h, n_nodes)
        ok = abs(estimate.estimate) <= SE_MULTIPLIER * estimate.se
        rows.append({'function': h.name, 'residual': estimate.estimate, 'se': estimate.se,
                     'z': abs(estimate.estimate) / estimate.se if estimate.se > 0 else 0.0, 'pass': ok})
    return pd.DataFrame(rows)


def semigroup_checks(params, grid, n_samples, seed):
    h = TestFunction(GAUSSIAN)
    values = h(grid.x)
    mask = grid.central()
    identity = float(np.max(np.abs(semigroup_apply(params, 0.0, values, grid) - values)))
    near_identity = float(np.max(np.abs(semigroup_apply(params, 1e-8, values, grid) - values)))
    composed = semigroup_apply(params, 0.3, semigroup_apply(params, 0.7, values, grid), grid)
    direct = semigroup_apply(params, 1.0, values, grid)
    composition = float(np.max(np.abs(composed - direct)[mask]))
    limit = semigroup_apply(params, 20.0, values, grid)
    mc_mean = expectation(params, h, grid, method='mc', n_samples=n_samples, seed=seed)
    limit_gap = float(np.max(np.abs(limit[mask] - mc_mean.estimate)))
    return {
        'identity': {'sup_gap': identity, 'pass': identity <= 1e-8},
        'near_identity': {'sup_gap': near_identity, 'pass': near_identity <= 1e-6},
        'composition': {'sup_gap': composition, 'pass': composition <= 1e-6},
        'limit': {'sup_gap': limit_gap, 'mc_mean': mc_mean.estimate, 'se': mc_mean.se,
                  'pass': limit_gap <= SE_MULTIPLIER * mc_mean.se},
    }


def cmd_stein(args):
    seed = resolve_seed(args)
    params = parse_params(args.bg)
    n_samples = int(args.n_samples or get_mc_params()['n_samples'])
    n_nodes = int(args.laguerre_nodes or get_quadrature_params()['laguerre_nodes'])
    banner("STEIN EQUATION", f"Target: {params.to_dict()} ({validate(params)})", f"Seed: {seed}",
           f"Mode: {'identity only' if args.identity_only else 'identity + solver'}")

    result = {'command': 'stein', 'config': resolved_config(args, seed)}

    print(f"\n[1/3] Stein identity over {n_samples:,} draws, {n_nodes} Gauss-Laguerre nodes")
    table = stein_identity_table(params, n_samples, seed, n_nodes)
    for row in table.to_dict(orient='records'):
        status(row['pass'], f"{row['function']:<20} residual {row['residual']:+.3e} (se {row['se']:.2e})")
    result['identity'] = table.to_dict(orient='records')
    write_csv(output_path(args, 'stein_identity.csv'), table)

    if not args.identity_only:
        grid = SteinGrid.for_params(params, n_x=args.n_x)
        print(f"\n[2/3] Semigroup checks on {grid.n_x} points over [{grid.x_min:.3f}, {grid.x_max:.3f}]")
        checks = semigroup_checks(params, grid, n_samples, seed)
        for name, check in checks.items():
            status(check['pass'], f"{name:<14} sup gap {check['sup_gap']:.3e}")
        result['semigroup'] = checks
        result['grid'] = grid.to_dict()

        print(f"\n[3/3] Solving the Stein equation for the W3 dictionary")
        solved = solve_dictionary(params, grid)
        rows = []
        solutions = {}
        for name, (f_h, residual, norms) in solved.items():
            flags = check_derivative_bounds(norms)
            ok = all(flags.values()) and residual <= 1e-3
            rows.append({'function': name, 'residual': residual, **norms,
                         **{f"{key}_ok": value for key, value in flags.items()}, 'pass': ok})
            solutions[name] = f_h
            status(ok, f"{name:<20} residual {residual:.2e}  |f| {norms['f']:.3f}  "
                       f"|f'| {norms['f1']:.3f}  |f''| {norms['f2']:.3f}")
        solver_table = pd.DataFrame(rows)
        result['solver'] = solver_table.to_dict(orient='records')
        result['edge_note'] = 'checks cover the central half of the grid; the taper region is excluded'
        write_csv(output_path(args, 'stein_solver.csv'), solver_table)
        write_csv(output_path(args, 'stein_solutions.csv'), grid_frame(grid, **solutions))

    path = write_json_report(report_path(args, 'stein_report.json'), result)
    print(f"\n✓ Report written to {path}")
    return result


# ---------------------------------------------------------------------------
# converge
# ---------------------------------------------------------------------------


def _mc_columns(g_samples, x_samples, bound_total):
    lower = smooth_w3_lower_bound(g_samples, x_samples, w3_dictionary())
    return {
        'w1_empirical': wasserstein1_empirical(g_samples, x_samples),
        'lower_bound': lower.estimate,
        'lower_bound_se': lower.se,
        'bracket_ok': lower.estimate <= bound_total + SE_MULTIPLIER * lower.se,
    }


def bg_sequence(params, n_checkpoints):
    """Spectra target + 4^{-k} (start - target), k = 0..n_checkpoints-1"""
    target = bg_matching_spectrum(params)
    factors = np.where(np.arange(target.dim) % 2 == 0, 1.8, 0.4)
    start = Spectrum.from_values(target.lambdas * factors)
    return [(4.0 ** -k, interpolated_spectrum(start, target, 4.0 ** -k)) for k in range(n_checkpoints)]


def converge_bg(args, seed):
    params = parse_params(args.bg or '2,1,2,1')
    checkpoints = parse_ints(args.checkpoints or DEFAULT_CHECKPOINTS['bg'], 'checkpoints')
    if len(checkpoints) != 1 or checkpoints[0] < 2:
        raise ConfigInvalid(f"the bg family takes a single checkpoint count >= 2, got {args.checkpoints}")
    n_checkpoints = checkpoints[0]
    x_samples = sample(params, int(args.mc), seed + 1) if args.mc else None
    rows = []
    for index, (weight, spec) in enumerate(bg_sequence(params, n_checkpoints), 1):
        cum = chaos_cumulants(spec)
        report = bounds.d3_bound_cumulants(cum, params)
        row = {'checkpoint': index, 'weight': weight, 'bound': report.total,
               **{f"kappa{j}": cum.k(j) for j in range(2, 7)}}
        if x_samples is not None:
            g_samples, _ = sample_chaos(spec, int(args.mc), seed + index, keep_paths=False)
            row.update(_mc_columns(g_samples, x_samples, report.total))
        rows.append(row)
        print(f"  [{index}/{n_checkpoints}] weight {weight:.4f}  bound {report.total:.4e}")
    return pd.DataFrame(rows), {'target': params.to_dict()}


def converge_clt(args, seed):
    sigma2 = float(args.sigma2)
    pairs = parse_ints(args.checkpoints or DEFAULT_CHECKPOINTS['clt'], 'checkpoints')
    x_samples = None
    if args.mc:
        x_samples = np.random.default_rng(seed + 1).normal(0.0, math.sqrt(sigma2), size=int(args.mc))
    rows = []
    for index, n in enumerate(pairs, 1):
        spec = clt_spectrum(sigma2, n)
        cum = chaos_cumulants(spec)
        report = bounds.d3_bound_normal(cum, sigma2)
        row = {'checkpoint': index, 'n_pairs': n, 'bound': report.total,
               **{f"kappa{j}": cum.k(j) for j in range(2, 7)}}
        if x_samples is not None:
            g_samples, _ = sample_chaos(spec, int(args.mc), seed + index, keep_paths=False)
            row.update(_mc_columns(g_samples, x_samples, report.total))
        rows.append(row)
        print(f"  [{index}/{len(pairs)}] n = {n:<5} bound {report.total:.4e}")
    return pd.DataFrame(rows), {'sigma2': sigma2}


def converge_ustat(args, seed):
    sizes = parse_ints(args.checkpoints or DEFAULT_CHECKPOINTS['ustat'], 'checkpoints')
    innovation = InnovationLaw.from_tag(args.innovation)
    params = parse_params(args.bg)
    rows = []
    for index, n in enumerate(sizes, 1):
        spec = ustat_kernel(n, innovation)
        influence_value = max_influence(spec, WORKED)
        cum = chaos_cumulants(bridge_kernel(spec))
        row = {'checkpoint': index, 'n': n, 'max_influence': influence_value,
               'invariance': bounds.invariance_term(innovation.rho, influence_value), 'kappa2': cum.k(2)}
        if params is not None:
            row['bound'] = bounds.d3_bound_homog(cum, params, innovation.rho, influence_value).total
        if args.mc:
            draws = sample_homog(spec, int(args.mc), seed + index)
            estimated = sample_cumulants(draws, 4, mc_config(args, seed, int(args.mc)))
            row.update({'kappa2_mc': estimated.k(2), 'kappa2_se': estimated.standard_error(2)})
        rows.append(row)
        print(f"  [{index}/{len(sizes)}] n = {n:<5} max influence {influence_value:.4e}  "
              f"invariance {row['invariance']:.4e}")
    return pd.DataFrame(rows), {'innovation': innovation.tag, 'rho': innovation.rho,
                                'influence_convention': WORKED}


CONVERGE_FAMILIES = {'bg': converge_bg, 'clt': converge_clt, 'ustat': converge_ustat}


def cmd_converge(args):
    seed = resolve_seed(args)
    if args.family == 'bg' and args.mc is None:
        args.mc = get_mc_params()['n_samples']
    banner("CONVERGENCE TRAJECTORY", f"Family: {args.family}", f"Seed: {seed}",
           f"MC draws per checkpoint: {args.mc or 'none'}")

    trajectory, extra = CONVERGE_FAMILIES[args.family](args, seed)
    summary = {}
    if 'bound' in trajectory:
        decreasing = bool(np.all(np.diff(trajectory['bound'].to_numpy()) < 0))
        summary['bound_strictly_decreasing'] = decreasing
        summary['final_bound'] = float(trajectory['bound'].iloc[-1])
        status(decreasing, "bound strictly decreasing across checkpoints")
    if 'w1_empirical' in trajectory:
        w1 = trajectory['w1_empirical'].to_numpy()
        summary['w1_ratio'] = float(w1[0] / w1[-1]) if w1[-1] > 0 else float('inf')
        summary['w1_ratio_ok'] = summary['w1_ratio'] >= W1_RATIO_MIN
        status(summary['w1_ratio_ok'],
               f"final W1 below the initial W1 by a factor {summary['w1_ratio']:.2f} (>= {W1_RATIO_MIN:g})")
        summary['bracket_ok'] = bool(trajectory['bracket_ok'].all())
        status(summary['bracket_ok'], "dictionary lower bound below the bound at every checkpoint")
    if 'invariance' in trajectory:
        summary['invariance_ratios'] = (trajectory['invariance'].to_numpy()[:-2]
                                        / trajectory['invariance'].to_numpy()[2:]).tolist()

    csv_path = write_csv(output_path(args, f"converge_{args.family}.csv"), trajectory)
    result = {'command': 'converge', 'family': args.family, 'config': resolved_config(args, seed),
              **extra, 'summary': summary, 'trajectory': trajectory.to_dict(orient='records'),
              'csv': csv_path}
    path = write_json_report(report_path(args, f"converge_{args.family}_report.json"), result)
    print(f"\n✓ Trajectory written to {csv_path}")
    print(f"✓ Report written to {path}")
    return result


# ---------------------------------------------------------------------------
# main
# ---------------------------------------------------------------------------


def main(argv=None):
    """Main execution function; returns the process exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return ConfigInvalid.exit_code if e.code else 0

    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format='%(asctime)s %(name)s %(levelname)s %(message)s')
    try:
        apply_config_file(args)
        args.func(args)
        banner(f"✓ {args.command.upper()} COMPLETED SUCCESSFULLY")
        return 0
    except BGChaosError as e:
        print(f"\n✗ {type(e).__name__}: {e}")
        logger.debug("failure detail", exc_info=True)
        return e.exit_code
    except Exception as e:
        print(f"\n✗ Fatal error: {e}")
        traceback.print_exc()
        return 1


if __name__ == '__main__':
    sys.exit(main())
