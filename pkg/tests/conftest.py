import pytest

import outerbilliard as ob


@pytest.fixture(scope="session")
def unit_circle():
    return ob.require_valid(ob.circle(1.0))


@pytest.fixture(scope="session")
def ellipse21():
    return ob.require_valid(ob.ellipse(2.0, 1.0))


@pytest.fixture(scope="session")
def wobbly3():
    """r = 1 + 0.05 cos(3 phi): strictly convex, three-fold symmetric, not an ellipse."""
    return ob.require_valid(ob.fourier(1.0, cos=[0.0, 0.0, 0.05]))


@pytest.fixture(scope="session")
def presets(unit_circle, ellipse21, wobbly3):
    return {"circle": unit_circle, "ellipse": ellipse21, "fourier": wobbly3}
