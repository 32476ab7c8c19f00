import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20260821)


def complex_matrix(rng, rows, cols):
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
