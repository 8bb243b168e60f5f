import numpy as np
import pytest

from pairspec.datagen import gen_points
from pairspec.kernels import KernelSpec, all_pairs


def random_spec(rng, transform="none"):
    """Gaussian spec with random gamma and construction."""
    return KernelSpec(
        "gaussian",
        gamma=float(10 ** rng.uniform(-1, 1)),
        construction=str(rng.choice(["kronecker", "pointwise"])),
        transform=transform,
    )


def random_problem(seed, n_v=None, dim=None):
    rng = np.random.default_rng(seed)
    n_v = n_v or int(rng.integers(3, 8))
    dim = dim or int(rng.integers(1, 4))
    points = gen_points(n_v, dim, rng)
    return rng, random_spec(rng), points, all_pairs(n_v)


@pytest.fixture
def small_problem():
    return random_problem(7, n_v=5, dim=2)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
