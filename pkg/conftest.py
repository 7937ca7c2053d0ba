"""
Shared fixtures for the dalat tests.
"""
import math

import pytest

from lattice import generate


@pytest.fixture(scope="session")
def square2():
    """Square patch of radius 2 (25 vertices)."""
    return generate('square', 2)


@pytest.fixture(scope="session")
def square3():
    return generate('square', 3)


@pytest.fixture(scope="session")
def square4():
    return generate('square', 4)


@pytest.fixture(scope="session")
def rhombic3():
    """Rhombic patch of radius 3 with alpha = pi/3."""
    return generate('rhombic', 3, math.pi / 3)


@pytest.fixture(scope="session", params=['square', 'rhombic'])
def patch3(request, square3, rhombic3):
    return square3 if request.param == 'square' else rhombic3


def vid(lattice, z):
    """Id of the vertex at coordinate z (asserts it exists)."""
    v = lattice.vertex_at(z)
    assert v is not None, f"no vertex at {z}"
    return v
