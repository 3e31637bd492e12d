import numpy as np
import pytest

from gapforge import build_domain, builtin_group, sample_dual

REFERENCE = dict(chamber_size=8, generator_count=2, port_width=1, neck_length=2)
REFERENCE_EPS = 0.1
REFERENCE_GROUPS = ("Z2", "Z2xZ2-semidirect", "inf-dihedral")


@pytest.fixture(scope="session")
def reference_domain():
    return build_domain(epsilon=REFERENCE_EPS, **REFERENCE)


@pytest.fixture(scope="session")
def z2():
    return builtin_group("Z2")


@pytest.fixture(scope="session")
def inf_dihedral():
    return builtin_group("inf-dihedral")


@pytest.fixture(scope="session")
def z2_semidirect():
    return builtin_group("Z2xZ2-semidirect")


@pytest.fixture(scope="session")
def z2_grid(z2):
    return sample_dual(z2, 8)


@pytest.fixture(scope="session")
def inf_dihedral_grid(inf_dihedral):
    return sample_dual(inf_dihedral, 8)


@pytest.fixture(scope="session")
def z2_semidirect_grid(z2_semidirect):
    return sample_dual(z2_semidirect, 8)


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
