import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from nfg.equilibrium_solver import constant_solution  # noqa: E402
from nfg.game_model import (  # noqa: E402
    GameSpec,
    Linear,
    SmoothPerturbed,
    UNIT_WEIGHT,
    constant_slope_spec,
    zero_game_spec,
)


@pytest.fixture
def coop_spec() -> GameSpec:
    """h' = (1, 2), unit weights, C = 2."""
    return constant_slope_spec(1.0, 2.0, C=2.0, L=5.0)


@pytest.fixture
def coop_solution():
    return constant_solution(1.0, 2.0, L=5.0, C=2.0)


@pytest.fixture
def conflict_spec() -> GameSpec:
    return constant_slope_spec(-1.0, 2.0, C=2.0, L=5.0)


@pytest.fixture
def perturbed_conflict_spec() -> GameSpec:
    """kappa = (-1, 2) with a tanh wiggle of size 0.02 on player 2."""
    return GameSpec(
        costs=(Linear(-1.0), SmoothPerturbed(kappa=2.0, amplitude=0.02, shape="tanh")),
        weights=(UNIT_WEIGHT, UNIT_WEIGHT),
        C=3.0,
        L=5.0,
    )


@pytest.fixture
def zero_spec() -> GameSpec:
    return zero_game_spec(C=1.0, L=5.0)
