from fractions import Fraction

import numpy as np
import pytest

from simplicial.height import Slope, floor_field
from simplicial.lattice import Edge, Lattice
from simplicial.regions import FixedBoundary, WeightFunction, enumerate_heights


def box_bc(d, n, slope=None, a=0, kind="B"):
    lattice = Lattice.of(d)
    s = Slope.zero(d) if slope is None else slope
    return FixedBoundary(lattice.make_box(kind, n), floor_field(s, a))


def random_weights(bc, seed=0):
    """Positive rational weights on the edges that touch R."""
    rng = np.random.default_rng(seed)
    table = {e: Fraction(int(rng.integers(1, 6)), int(rng.integers(1, 4))) for e in sorted(bc.incident)}
    return WeightFunction(table)


@pytest.fixture
def lattice2():
    return Lattice.of(2)


@pytest.fixture
def lattice3():
    return Lattice.of(3)


@pytest.fixture
def hexagon_bc():
    """One free vertex (1, 1, 0) with two admissible values, 2 and -1."""
    return box_bc(2, 2, a=2)


@pytest.fixture
def frozen_bc():
    return box_bc(2, 2, a=0)


@pytest.fixture
def b3_bc():
    return box_bc(2, 3)


@pytest.fixture
def b3_fields(b3_bc):
    return list(enumerate_heights(b3_bc))


@pytest.fixture
def d3_single_bc():
    return box_bc(3, 2, a=2)


@pytest.fixture
def sample_edge(lattice2):
    return Edge((0, 0, 0), 1)
