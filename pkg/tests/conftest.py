import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from barrierperc.lattice import BarrierModel, BondGrid, LatticeGeometry


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_instance(rng, L=None):
    """Random (geometry, grid, occupied) triple on a small lattice."""
    if L is None:
        L = int(rng.integers(2, 7))
    geom = LatticeGeometry(L)
    nb = geom.bonds_per_direction
    p_open = rng.random()
    grid = BondGrid(
        L=L,
        horizontal=(rng.random(nb) < p_open).astype(np.uint8),
        vertical=(rng.random(nb) < p_open).astype(np.uint8),
    )
    occupied = (rng.random(geom.N) < rng.random()).astype(np.uint8)
    return geom, grid, occupied


ALL_BARRIER_MODELS = [
    BarrierModel.SQ2N_1,
    BarrierModel.SQ2N_2,
    BarrierModel.SQ2N_2_CORNERS,
    BarrierModel.SQ2N_2_PARALLELS,
]
