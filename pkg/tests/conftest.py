import numpy as np
import pytest

from szegolab.domain import (
    Weight,
    make_heisenberg,
    make_parabolic_tube,
    make_sharpness_tube,
)
from szegolab.geometry import MetricContext


@pytest.fixture(scope="session")
def heis():
    w, p = make_heisenberg()
    return w, p


@pytest.fixture(scope="session")
def heis_ctx():
    return MetricContext.heisenberg()


@pytest.fixture(scope="session")
def parabolic():
    return make_parabolic_tube()


@pytest.fixture(scope="session")
def parabolic_ctx(parabolic):
    return MetricContext.from_profile(parabolic)


@pytest.fixture(scope="session")
def sharp():
    return make_sharpness_tube()


@pytest.fixture()
def rng():
    return np.random.default_rng(20240901)


@pytest.fixture(scope="session")
def const_weight():
    def make(c):
        return Weight(
            lambda z: c * np.ones_like(np.real(np.asarray(z))),
            lambda a, b, z: complex(c) if a == b == 0 else 0j,
            max_order=99,
            name=f"const({c})",
            sup_norm=abs(c),
        )

    return make
