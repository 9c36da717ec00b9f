# tests/conftest.py

import os
import sys

import numpy as np
import pytest

# Ensure the tests can find the project modules
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from core.lattice import CouplingPattern, PhaseLabel, singlet_reference_state
from core.mps import product_state, random_mps


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def random_state(rng):
    """Eight sites, bond dimension 4."""
    return random_mps(8, 4, rng)


@pytest.fixture
def zero_state():
    return product_state([0] * 6)


@pytest.fixture
def even_singlets():
    return singlet_reference_state(PhaseLabel.EVEN_HALDANE, 8)


@pytest.fixture
def odd_singlets():
    return singlet_reference_state(PhaseLabel.ODD_HALDANE, 8)


@pytest.fixture
def even_pattern():
    return CouplingPattern(1.0, 0.5, 8)


@pytest.fixture
def odd_pattern():
    return CouplingPattern(0.5, 1.0, 8)
