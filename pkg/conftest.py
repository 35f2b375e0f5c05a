"""Pytest configuration file."""

import sys
from pathlib import Path

import numpy as np
import pytest

# Ensure the project root is in the path for imports
project_root = Path(__file__).parent
if str(project_root) not in sys.path:
    sys.path.insert(0, str(project_root))


@pytest.fixture
def rng():
    """Seeded generator so sampling tests are reproducible."""
    return np.random.default_rng(20240611)
