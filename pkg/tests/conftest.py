import numpy as np
import pytest

from voxcache.fields import FieldDomain, RawLatticeField, make_procedural


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_lattice_field(dims, seed=0, smooth=True):
    """Lattice field with reproducible pseudo-random content."""
    vx, vy, vz = dims
    r = np.random.default_rng(seed)
    lattice = r.random((vz, vy, vx)).astype(np.float32)
    if smooth:
        for axis in range(3):
            lattice = 0.5 * lattice + 0.25 * (np.roll(lattice, 1, axis) + np.roll(lattice, -1, axis))
        lattice -= lattice.min()
        lattice /= max(lattice.max(), 1e-9)
    return RawLatticeField(lattice.astype(np.float32), FieldDomain(dims))


@pytest.fixture
def sphere32():
    return make_procedural("sphere", (32, 32, 32))
