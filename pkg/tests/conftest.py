import numpy as np
import pytest

from spinsqueeze.model import build_grid, derive_params, simulation_setup

# the benchmark working point used throughout: moderate temperature,
# strongest interaction of the reference figures
BENCH_S = 1.32e-2
BENCH_THETA = 0.5


@pytest.fixture(scope="session")
def bench_params():
    return derive_params(BENCH_S, BENCH_THETA, n_atoms=10 ** 6)


@pytest.fixture(scope="session")
def small_setup():
    """Consistent (params, grid) at n_max = 8 for cheap simulation tests."""
    return simulation_setup(BENCH_S, BENCH_THETA, 8)


@pytest.fixture(scope="session")
def grid16(bench_params):
    return build_grid(16, "cubic", bench_params.temperature)


def assert_close(a, b, rtol, msg=""):
    assert np.isclose(a, b, rtol=rtol, atol=0.0), \
        f"{msg} got {a!r}, want {b!r} (rtol {rtol})"
