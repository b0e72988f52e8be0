import numpy as np
import pytest

from fluxmem.model import TokenGrid
from fluxmem.rng import PortableRng


def random_grid(frame_index: int, h: int = 4, w: int = 4, d: int = 8, seed: int = 0) -> TokenGrid:
    rng = PortableRng(seed, 0x9409D, frame_index)
    return TokenGrid(frame_index=frame_index, data=rng.unit_vectors(h * w, d).reshape(h, w, d))


def random_triple(h: int = 8, w: int = 8, d: int = 16, seed: int = 0):
    return tuple(random_grid(t, h, w, d, seed=seed) for t in range(3))


@pytest.fixture(autouse=True)
def _reset_distance_counter():
    from fluxmem import scoring

    scoring.reset_distance_evaluations()
    yield
