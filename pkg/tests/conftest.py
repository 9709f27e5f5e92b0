import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tppforge.catalog import default_catalog, group_from_text  # noqa: E402


@pytest.fixture(scope="session")
def catalog():
    return default_catalog()


@pytest.fixture(scope="session")
def small_catalog(catalog):
    return [e for e in catalog if e.order <= 12]


@pytest.fixture
def G():
    return group_from_text
