"""Shared fixtures."""

import textwrap

import numpy as np
import pytest

from mpdata_pricing.finmodel import MarketParams
from mpdata_pricing.mpdata import ScalarField
from mpdata_pricing.transport import BoundaryKind, fill_halo


@pytest.fixture
def periodic():
    """Build a periodic, halo-filled field from interior values."""

    def build(interior, halo=2):
        return fill_halo(ScalarField.from_interior(np.asarray(interior, dtype=float), halo), BoundaryKind.PERIODIC)

    return build


@pytest.fixture
def periodic_fill():
    return lambda field: fill_halo(field, BoundaryKind.PERIODIC)


@pytest.fixture
def corridor_market():
    return MarketParams(r=0.008, sigma=0.6)


@pytest.fixture
def table_market():
    return MarketParams(r=0.08, sigma=0.2)


@pytest.fixture
def write_config(tmp_path):
    """Write an INI file into tmp_path and return its path."""

    def write(text, name="run.ini"):
        path = tmp_path / name
        path.write_text(textwrap.dedent(text))
        return path

    return write
