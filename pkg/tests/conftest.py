import numpy as np
import pytest

from momgait import connection, linkage


@pytest.fixture(scope="session")
def swimmer_grid():
    return connection.build_grid(linkage.swimmer(), n=64)


@pytest.fixture(scope="session")
def snake_grid():
    return connection.build_grid(linkage.snake(), n=64)
