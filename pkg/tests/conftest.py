import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fbpme.littlewood_paley import build_partition
from fbpme.spectral import GridSpec, SpectralField

settings.register_profile("default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_real_field(grid: GridSpec, rng: np.random.Generator, dealiased: bool = True) -> SpectralField:
    """Random field with Hermitian coefficients (transform of random real samples)."""
    from fbpme.spectral import RealField, forward_transform

    U = forward_transform(RealField(grid, rng.standard_normal(grid.shape)))
    if dealiased:
        U = SpectralField(grid, np.where(grid.dealias_mask, U.coeffs, 0.0))
    return U


@pytest.fixture
def grid1():
    return GridSpec(1, 128, 16.0)


@pytest.fixture
def part1(grid1):
    return build_partition(grid1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[0][2:])):
            terminalreporter.write_line(line)
