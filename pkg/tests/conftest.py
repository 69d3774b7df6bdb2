import numpy as np
import pytest

from vrjplab import ArrayGraph, LatticeParams, build_finite_box


@pytest.fixture
def box3():
    """Small subcritical box: 9 vertices."""
    return build_finite_box(LatticeParams(rho=4.0, wbar=1.0, n=3))


@pytest.fixture
def box2():
    return build_finite_box(LatticeParams(rho=4.0, wbar=1.0, n=2))


@pytest.fixture
def pair_graph():
    return ArrayGraph(np.array([[0.0, 0.8], [0.8, 0.0]]))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
