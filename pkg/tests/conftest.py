import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from smlink import PreScaling, build_signal_set, make_apsk_initial, make_initial_prescaling


@pytest.fixture
def qpsk_set():
    return build_signal_set(make_apsk_initial(4), PreScaling([1.0]), 1)


@pytest.fixture
def initial_16_2():
    return build_signal_set(make_apsk_initial(16), make_initial_prescaling(16, 2), 2)


@pytest.fixture
def initial_16_4():
    return build_signal_set(make_apsk_initial(16), make_initial_prescaling(16, 4), 4)


def random_quadrant_free(rng: np.random.Generator, n: int) -> np.ndarray:
    """Random points in the open first quadrant (valid free points)."""
    return rng.uniform(0.1, 1.5, n) + 1j * rng.uniform(0.1, 1.5, n)
