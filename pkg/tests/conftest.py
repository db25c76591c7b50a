import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from geoacker import Dataset  # noqa: E402
from geoacker.kernels import BACKENDS  # noqa: E402


@pytest.fixture(params=sorted(BACKENDS))
def backend(request):
    """Each test using this runs once per available kernel backend."""
    return BACKENDS[request.param]


def random_dataset(n, n_classes=3, seed=0, grid=None):
    """Random labeled points; ``grid`` rounds coordinates to force distance ties."""
    rng = np.random.default_rng(seed)
    xy = rng.uniform(-5.0, 5.0, size=(n, 2))
    if grid:
        xy = np.round(xy / grid) * grid
    labels = rng.integers(0, n_classes, size=n)
    return Dataset(xy, labels, tuple(f"c{i}" for i in range(n_classes)), "random")


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    lines = getattr(acceptance, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
