import numpy as np
import pytest

from relightkit.mesh import rasterize_geometry
from relightkit.synth import make_centered_sphere


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def small_sphere():
    """Pole axis +x, 416 triangles, even band count so the terminator of a
    +x light is a vertex ring; centered off the pixel grid."""
    return make_centered_sphere(96, 96, slices=16, bands=14, axis=(1, 0, 0))


@pytest.fixture(scope="session")
def small_sphere_gbuffer(small_sphere):
    return rasterize_geometry(small_sphere, 96, 96)
