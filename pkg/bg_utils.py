#!/usr/bin/env python3
"""
Shared configuration and report utilities for the bilateral-gamma toolkit
"""

import configparser
import json
import os
import tempfile

import numpy as np


def get_config():
    """Read configuration from config.ini"""
    config = configparser.ConfigParser()
    config_path = os.path.join(os.path.dirname(__file__), 'config.ini')
    config.read(config_path)
    return config


def get_mc_params():
    """Get Monte-Carlo parameters from config.ini with environment variable fallbacks"""
    config = get_config()
    return {
        'seed': int(os.getenv('BG_SEED', config.get('monte_carlo', 'seed', fallback='20240601'))),
        'n_samples': int(os.getenv('BG_N_SAMPLES', config.get('monte_carlo', 'n_samples', fallback='1000000'))),
        'n_batches': int(os.getenv('BG_N_BATCHES', config.get('monte_carlo', 'n_batches', fallback='32'))),
        'chunk_size': int(os.getenv('BG_CHUNK_SIZE', config.get('monte_carlo', 'chunk_size', fallback='250000'))),
    }


def get_quadrature_params():
    """Get quadrature node counts"""
    config = get_config()
    return {
        'laguerre_nodes': int(os.getenv('BG_LAGUERRE_NODES', config.get('quadrature', 'laguerre_nodes', fallback='64'))),
        'time_nodes': int(os.getenv('BG_TIME_NODES', config.get('quadrature', 'time_nodes', fallback='64'))),
        'max_time_nodes': int(os.getenv('BG_MAX_TIME_NODES',
                                        config.get('quadrature', 'max_time_nodes', fallback='1024'))),
    }


def get_stein_params():
    """Get Stein solver grid settings"""
    config = get_config()
    return {
        'n_x': int(os.getenv('BG_STEIN_NX', config.get('stein', 'n_x', fallback='4096'))),
        'width_sd': float(os.getenv('BG_STEIN_WIDTH', config.get('stein', 'width_sd', fallback='24'))),
        'taper': float(os.getenv('BG_STEIN_TAPER', config.get('stein', 'taper', fallback='0.25'))),
    }


def get_tolerances():
    """Numerical tolerances used by the identity checks"""
    config = get_config()
    return {
        'symmetry': config.getfloat('tolerances', 'symmetry', fallback=1e-12),
        'route_rel': config.getfloat('tolerances', 'route_rel', fallback=1e-9),
        'radicand': config.getfloat('tolerances', 'radicand', fallback=1e-10),
        'parseval': config.getfloat('tolerances', 'parseval', fallback=1e-6),
        'quadrature': config.getfloat('tolerances', 'quadrature', fallback=1e-5),
    }


def get_output_dir():
    config = get_config()
    return os.getenv('BG_OUTPUT_DIR', config.get('output', 'directory', fallback='results'))


def _json_default(value):
    """json.dump hook for numpy scalars, arrays and complex numbers"""
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, complex):
        return {'re': value.real, 'im': value.imag}
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def _atomic_write(path, write_fn):
    """Write to a temp file next to path, then rename over it"""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix='.tmp_', suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, 'w', newline='') as handle:
            write_fn(handle)
        os.replace(tmp_path, path)
    except Exception:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise


def write_json_report(path, report):
    """Atomically write a JSON report"""
    _atomic_write(path, lambda handle: json.dump(report, handle, indent=2, default=_json_default))
    return path


def write_csv(path, frame):
    """Atomically write a pandas DataFrame as CSV"""
    _atomic_write(path, lambda handle: frame.to_csv(handle, index=False))
    return path


def write_text(path, text):
    """Atomically write a plain-text file"""
    _atomic_write(path, lambda handle: handle.write(text))
    return path
