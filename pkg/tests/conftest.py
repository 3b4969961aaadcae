import pathlib

import pytest

from kepfair.instance import Caps, parse_instance

DATA = pathlib.Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def fig1_path() -> pathlib.Path:
    return DATA / "fig1.kep"


@pytest.fixture(scope="session")
def fig1(fig1_path):
    """Six pairs in two cycles plus an NDD chain; PRA makes v1, v4 hard."""
    return parse_instance(fig1_path.read_text())


@pytest.fixture(scope="session")
def caps() -> Caps:
    return Caps(cycle_cap=3, chain_cap=3)
