from pathlib import Path

import pytest

import ratejumps as rj

CONFIG_DIR = Path(rj.__file__).parent / "configs"

# base constant-coefficient model shared by the experiment scenarios
ALPHA, BETA, SIGMA = 0.075, -0.3, 0.1


def bundled(name: str) -> Path:
    """Path of a packaged scenario file."""
    return CONFIG_DIR / f"{name}.cfg"


def experiment_timeline(case: int, maturity: float = 1.0) -> rj.Timeline:
    """The four standard schedules: 1 plain, 2 roll-over at 0.8, 3 Gaussian
    jump at 0.5, 4 both."""
    jumps = [(0.5, rj.Gaussian(0.09, 0.5))] if case in (3, 4) else []
    rolls = [0.8] if case in (2, 4) else []
    return rj.merge_relevant_dates(jumps, rolls, maturity)


@pytest.fixture(scope="session")
def model():
    return rj.vasicek(ALPHA, BETA, SIGMA)
