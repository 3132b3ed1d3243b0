import pytest

from escdb.bench import GenSpec, generate
from escdb.catalog import Catalog


@pytest.fixture(scope="session")
def tpch_small():
    """orders 1500 / lineitem ~6000 / part 200 / supplier 10."""
    return generate(GenSpec("tpch_subset", 0.001, 7))


@pytest.fixture(scope="session")
def custom_nulls():
    """20K-row mixed-kind table with ~8% NULLs per nullable column."""
    return generate(GenSpec("custom", 0.02, 3, null_fraction=0.08))["data"]


def make_catalog(*tables) -> Catalog:
    cat = Catalog()
    for t in tables:
        cat.register(t)
    return cat


@pytest.fixture()
def tpch_catalog(tpch_small):
    return make_catalog(*tpch_small.values())
