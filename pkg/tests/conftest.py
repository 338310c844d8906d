import pytest
from hypothesis import settings

from wavrel.geometry import make_domain

settings.register_profile("repro", derandomize=True, deadline=None)
settings.load_profile("repro")

DISK = {"curves": [{"kind": "circle", "r": 1}]}
ANNULUS = {"curves": [{"kind": "circle", "r": 2}, {"kind": "circle", "r": 1}], "outer": 0}
ELLIPSE = {"curves": [{"kind": "ellipse", "a": 1.5, "b": 0.8}]}
# rounded square, convex; its four light points have unequal curvature
BLOB = {"curves": [{"kind": "fourier", "cx": [0, 1, 0, 0.0, 0.1], "cy": [0, 0, 1, 0.08, 0]}]}
# non-convex: the light points at pi/4 + k pi/2 have negative curvature
BEAN = {"curves": [{"kind": "fourier", "cx": [0, 1, 0, 0, 0, 0.3, 0],
                    "cy": [0, 0, 1, 0, 0, 0, -0.3]}]}
FOUR_HOLES = {"curves": [{"kind": "circle", "r": 3},
                         {"kind": "circle", "r": 0.5, "center": [1.2, 0.3]},
                         {"kind": "circle", "r": 0.4, "center": [-1.1, 0.9]},
                         {"kind": "circle", "r": 0.45, "center": [-0.3, -1.4]}], "outer": 0}


@pytest.fixture(scope="session")
def disk():
    return make_domain(DISK)


@pytest.fixture(scope="session")
def annulus():
    return make_domain(ANNULUS)


@pytest.fixture(scope="session")
def ellipse():
    return make_domain(ELLIPSE)


@pytest.fixture(scope="session")
def blob():
    return make_domain(BLOB)


@pytest.fixture(scope="session")
def bean():
    return make_domain(BEAN)


@pytest.fixture(scope="session")
def four_holes():
    return make_domain(FOUR_HOLES)
