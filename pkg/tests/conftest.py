import numpy as np
import pytest

from snellmc import Lattice, PayoffSpec


@pytest.fixture
def put_lattice():
    """Three-date lattice with two states per date and a known optimal rule.

    Under the strike-100 put, exact backward induction exercises in the low
    state at date 2 and continues everywhere at date 1; the root value is
    15.72839926 (see test_engine for the hand computation).
    """
    return Lattice(
        levels=(
            np.array([100.0]),
            np.array([85.0, 115.0]),
            np.array([75.0, 125.0]),
            np.array([65.0, 135.0]),
        ),
        transitions=(
            np.array([[0.5, 0.5]]),
            np.array([[0.6, 0.4], [0.35, 0.65]]),
            np.array([[0.55, 0.45], [0.25, 0.75]]),
        ),
        discounts=(0.98, 0.98, 0.98),
    )


@pytest.fixture
def put_100():
    return PayoffSpec(kind="vanilla_put", strikes=(100.0,))
