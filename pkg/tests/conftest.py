"""Shared pytest fixtures and configuration."""

import dataclasses
import logging
import tempfile
from pathlib import Path

import numpy as np
import pytest

from src.assortment.choice import ChoiceModel
from src.model.instance import CustomerType, Instance, MarkovArrival


@pytest.fixture(scope="session")
def project_root():
    """Get project root directory."""
    return Path(__file__).parent.parent


@pytest.fixture(autouse=True)
def reset_package_logger():
    """Undo setup_logging so caplog sees package records again."""
    yield
    root = logging.getLogger("src")
    root.handlers.clear()
    root.propagate = True
    root.setLevel(logging.NOTSET)


@pytest.fixture
def temp_dir():
    """Create temporary directory for test files."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


def make_tiny() -> Instance:
    """
    Two periods, one unit of one resource, states A and B alternating.

    Type 0 (r=5) arrives in A, type 1 (r=2) in B, each state starts with
    probability 1/2.
    """
    arrival = MarkovArrival(
        horizon=2,
        states=("A", "B"),
        initial=[0.5, 0.5],
        transitions=[[[0.0, 1.0], [1.0, 0.0]]],
        state_type=(0, 1),
    )
    return Instance(
        resource_names=("r",),
        capacities=(1,),
        types=(CustomerType(0, 5.0, (1,)), CustomerType(1, 2.0, (1,))),
        arrival=arrival,
    )


def make_assortment_fixture(horizon: int = 1) -> Instance:
    """
    One state, products 1 (r=5, leg r0) and 2 (r=2, leg r1) plus the null product 0.

    phi_1({0,1}) = 0.5, phi_2({0,2}) = 0.5, phi({0,1,2}) = (0.4, 0.3).
    """
    family = ((0,), (0, 1), (0, 2), (0, 1, 2))
    table = np.array([
        [[1.0, 0.0, 0.0]],
        [[0.5, 0.5, 0.0]],
        [[0.5, 0.0, 0.5]],
        [[0.3, 0.4, 0.3]],
    ])
    arrival = MarkovArrival(
        horizon=horizon,
        states=("s",),
        initial=[1.0],
        transitions=np.ones((horizon - 1, 1, 1)),
        state_type=(0,),
    )
    return Instance(
        resource_names=("r0", "r1"),
        capacities=(1, 1),
        types=(
            CustomerType(0, 0.0, (0, 0)),
            CustomerType(1, 5.0, (1, 0)),
            CustomerType(2, 2.0, (0, 1)),
        ),
        arrival=arrival,
        choice=ChoiceModel(null_product=0, family=family, table=table),
    )


@pytest.fixture
def tiny():
    """The two-period alternating fixture used throughout the golden-value tests."""
    return make_tiny()


@pytest.fixture
def assort_instance():
    """Single-period assortment fixture with best assortment {0,1,2} worth 2.6."""
    return make_assortment_fixture()


@pytest.fixture
def zero_reward(tiny):
    """TINY-1 with every reward set to zero."""
    return dataclasses.replace(
        tiny, types=tuple(CustomerType(t.id, 0.0, t.consumes) for t in tiny.types)
    )


@pytest.fixture
def single_type():
    """T=1, one state, one type with r=7 and C=(1)."""
    arrival = MarkovArrival(
        horizon=1, states=("s",), initial=[1.0], transitions=np.zeros((0, 1, 1)), state_type=(0,)
    )
    return Instance(("r",), (1,), (CustomerType(0, 7.0, (1,)),), arrival)


# Pytest configuration
def pytest_configure(config):
    """Configure pytest with custom markers."""
    config.addinivalue_line(
        "markers", "slow: marks tests as slow (deselect with '-m \"not slow\"')"
    )
    config.addinivalue_line(
        "markers", "integration: marks tests as integration tests"
    )
    config.addinivalue_line(
        "markers", "unit: marks tests as unit tests"
    )


def pytest_collection_modifyitems(config, items):
    """Automatically mark tests based on their location."""
    for item in items:
        if "test_main" in item.nodeid or "test_experiments" in item.nodeid:
            item.add_marker(pytest.mark.integration)
        else:
            item.add_marker(pytest.mark.unit)

        if any(keyword in item.nodeid for keyword in ["corpus", "experiments", "reproduce"]):
            item.add_marker(pytest.mark.slow)
