import pytest

from adaptsyn.pipeline import build_grid, build_scalar
from adaptsyn.systems import make_pts


def two_param_pts():
    """Three-state PTS with two parameter slices; the slices agree on some
    transitions and differ on others, so a single observation can identify
    the parameter."""
    return make_pts(
        states=("x1", "x2", "x3"), inputs=("u1", "u2"), params=("t1", "t2"),
        props=(), labels={},
        transitions={
            ("x1", "u1", "t1"): ["x2"], ("x1", "u2", "t1"): ["x3"],
            ("x2", "u1", "t1"): ["x2"], ("x2", "u2", "t1"): ["x2"],
            ("x3", "u1", "t1"): ["x3"], ("x3", "u2", "t1"): ["x1"],
            ("x1", "u1", "t2"): ["x2"], ("x1", "u2", "t2"): ["x3"],
            ("x2", "u1", "t2"): ["x3"], ("x2", "u2", "t2"): ["x2"],
            ("x3", "u1", "t2"): ["x3"], ("x3", "u2", "t2"): ["x3"],
        })


@pytest.fixture
def demo_pts():
    return two_param_pts()


@pytest.fixture(scope="session")
def scalar_artifacts():
    return build_scalar()


@pytest.fixture(scope="session")
def grid_artifacts():
    return build_grid()
