from __future__ import annotations

import os

import pytest

from choquard.functional import NonlinearityParams
from choquard.grid import GridSpec, build_grid
from choquard.riesz import CACHE_ENV, build_kernel


@pytest.fixture(scope="session")
def kernel_cache(tmp_path_factory):
    """Kernel cache shared by the whole session (reuses CHOQUARD_CACHE_DIR when set)."""
    old = os.environ.get(CACHE_ENV)
    path = old or str(tmp_path_factory.mktemp("kernels"))
    os.environ[CACHE_ENV] = path
    yield path
    if old is None:
        os.environ.pop(CACHE_ENV, None)


@pytest.fixture(scope="session")
def params7():
    return NonlinearityParams.doubly_critical(7, 2.0)


@pytest.fixture(scope="session")
def kernel7(kernel_cache):
    return build_kernel(build_grid(GridSpec(7, 60.0, 2000, 2.0)), 2.0, cache_dir=kernel_cache)


@pytest.fixture(scope="session")
def kernel7_fine(kernel_cache):
    return build_kernel(build_grid(GridSpec(7, 60.0, 4000, 2.0)), 2.0, cache_dir=kernel_cache)


@pytest.fixture(scope="session")
def kernel7_small(kernel_cache):
    return build_kernel(build_grid(GridSpec(7, 40.0, 400, 2.0)), 2.0, cache_dir=kernel_cache)


@pytest.fixture(scope="session")
def grid7(kernel7):
    return kernel7.grid
