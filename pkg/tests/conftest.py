"""
Shared pytest fixtures
"""
import numpy as np
import pytest

from soltrans.models import Sol3Point


@pytest.fixture
def rng():
    """Seeded generator so property draws are reproducible"""
    return np.random.default_rng(20240611)


@pytest.fixture
def random_points(rng):
    def draw(n: int, scale: float = 2.0):
        values = rng.uniform(-scale, scale, size=(n, 3))
        return [Sol3Point.from_array(v) for v in values]
    return draw
