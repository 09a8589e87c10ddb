import os
import subprocess
import sys

import numpy as np
import pytest

from rdlab.domain import DomainSpec
from rdlab.nonlinearity import DissipativityConstants, NonlinearitySpec

CONFIG_DIR = os.path.join(os.path.dirname(__file__), os.pardir, "configs")


@pytest.fixture(scope="session")
def dom():
    """Reference interior grid: 255 points on (0, 1)."""
    return DomainSpec(dimension=1, side_length=1.0, points_per_axis=255)


@pytest.fixture(scope="session")
def dom_small():
    """Coarse grid for quick solver runs."""
    return DomainSpec(dimension=1, side_length=1.0, points_per_axis=63)


@pytest.fixture(scope="session")
def dom_2d():
    return DomainSpec(dimension=2, side_length=1.0, points_per_axis=31)


@pytest.fixture(scope="session")
def cubic():
    """f(s) = s^3 - s."""
    return NonlinearitySpec(coefficients=(-1.0, 0.0, 1.0))


@pytest.fixture(scope="session")
def cubic_constants():
    return DissipativityConstants(p=4.0, kappa=3.0, l=1.0, alpha=0.5, beta=0.5, sigma=2.0)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


def config_path(name: str) -> str:
    return os.path.abspath(os.path.join(CONFIG_DIR, name))


def run_cli(args, cwd=None):
    """Invoke the CLI in a subprocess; returns (exit_code, stdout, stderr)."""
    proc = subprocess.run(
        [sys.executable, "-m", "rdlab.cli"] + list(args),
        capture_output=True,
        text=True,
        cwd=cwd,
    )
    return proc.returncode, proc.stdout, proc.stderr
