import pytest

from relaycap import CapacityTable, SamplePool


@pytest.fixture(scope="session")
def pool3():
    """20k shared 3x3 draws reused across table and network tests."""
    return SamplePool.build(3, 20_000, seed=11)


@pytest.fixture(scope="session")
def table3_10(pool3):
    return CapacityTable.from_pool(pool3, 10.0)


@pytest.fixture(scope="session")
def table3_1(pool3):
    return CapacityTable.from_pool(pool3, 1.0)
