from __future__ import annotations

from importlib import resources

import numpy as np
import pytest

from gaborflow.grid import Signal, gaussian_window, make_grid


def data_path(name: str) -> str:
    return str(resources.files("gaborflow") / "data" / name)


def random_signal(rng: np.random.Generator, grid) -> Signal:
    return Signal(grid, rng.standard_normal(grid.N) + 1j * rng.standard_normal(grid.N))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def grid256():
    return make_grid(256, 16.0)


@pytest.fixture(scope="session")
def phi256(grid256):
    return gaussian_window(grid256)


def load_data_config(name: str):
    from gaborflow.config import load_config

    return load_config(data_path(name))


@pytest.fixture(scope="session")
def baseline_records():
    from gaborflow.experiment import run_deformation_experiment

    return run_deformation_experiment(load_data_config("baseline.json"))


@pytest.fixture(scope="session")
def control_records():
    from gaborflow.experiment import run_deformation_experiment

    return run_deformation_experiment(load_data_config("quadratic_control.json"))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
