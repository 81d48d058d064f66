from __future__ import annotations

import pytest

from rosenau.models import reference_problem


@pytest.fixture
def burgers():
    """Burgers flux on [0, 2] at α = 1."""
    return reference_problem(1.0)
