import os

import numpy as np
import pytest

from bg_core import BGParams
from chaos import ChaosKernel, random_kernel, write_kernel

ENV_KEYS = ('BG_SEED', 'BG_N_SAMPLES', 'BG_N_BATCHES', 'BG_CHUNK_SIZE', 'BG_LAGUERRE_NODES',
            'BG_TIME_NODES', 'BG_MAX_TIME_NODES', 'BG_STEIN_NX', 'BG_STEIN_WIDTH', 'BG_STEIN_TAPER', 'BG_OUTPUT_DIR')


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    """Tests see config.ini defaults only"""
    for key in ENV_KEYS:
        monkeypatch.delenv(key, raising=False)


@pytest.fixture
def laplace2():
    return BGParams(2.0, 1.0, 2.0, 1.0)


@pytest.fixture
def general_params():
    return BGParams(2.0, 3.0, 4.0, 5.0)


@pytest.fixture
def diag_kernel():
    return ChaosKernel.diagonal([1.0, -1.0])


@pytest.fixture
def small_kernel():
    return random_kernel(5, seed=7, scale=0.2)


@pytest.fixture
def kernel_file(tmp_path, small_kernel):
    path = os.path.join(str(tmp_path), 'k.txt')
    write_kernel(path, small_kernel)
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
