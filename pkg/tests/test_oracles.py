#!/usr/bin/env python3
"""Tests for the closed-form and tree reference prices."""

import math

import numpy as np
import pytest

from mpdata_pricing.errors import ConfigurationError
from mpdata_pricing.oracles import (
    AnalyticInputs,
    AMERICAN_PUT_MARKET,
    binomial_american_put,
    bjerksund_stensland_put,
    bs_call,
    bs_put,
    corridor_value,
    norm_cdf,
    american_put_reference,
)


def _table_inputs(T, S0):
    return AnalyticInputs(S0, AMERICAN_PUT_MARKET["K"], AMERICAN_PUT_MARKET["r"], AMERICAN_PUT_MARKET["sigma"], T)


def test_norm_cdf_values():
    assert norm_cdf(0.0) == pytest.approx(0.5)
    assert norm_cdf(1.959964) == pytest.approx(0.975, abs=1e-6)
    assert np.allclose(norm_cdf([-1.0, 1.0]).sum(), 1.0)


def test_put_call_parity():
    """C - P = S - K exp(-rT)."""
    inputs = AnalyticInputs(100, 95, 0.05, 0.3, 0.75)
    assert bs_call(inputs) - bs_put(inputs) == pytest.approx(100 - 95 * math.exp(-0.05 * 0.75), rel=1e-12)


def test_bs_call_example():
    """S = K = 100, r = 0.08, sigma = 0.2, T = 0.25."""
    assert bs_call(_table_inputs(0.25, 100)) == pytest.approx(5.017, abs=1e-3)


def test_european_column_of_reference_table():
    table = american_put_reference()
    assert len(table) == 15
    for row in table.itertuples():
        assert bs_put(_table_inputs(row.T, row.S0)) == pytest.approx(row.european, abs=5e-4)


def test_bjerksund_stensland_column_of_reference_table():
    for row in american_put_reference().itertuples():
        assert bjerksund_stensland_put(_table_inputs(row.T, row.S0)) == pytest.approx(row.bs93, abs=5e-4)


def test_bjerksund_stensland_put_is_vectorized():
    """An array of spots gives the same numbers as scalar calls."""
    spots = np.array([80.0, 100.0, 120.0])
    values = bjerksund_stensland_put(_table_inputs(0.5, spots))
    assert values.shape == (3,)
    for spot, value in zip(spots, values):
        assert value == pytest.approx(bjerksund_stensland_put(_table_inputs(0.5, spot)), rel=1e-12)


def test_bjerksund_stensland_dominates_european():
    for T, S0 in [(0.25, 100), (3.0, 90), (0.5, 120)]:
        inputs = _table_inputs(T, S0)
        assert bjerksund_stensland_put(inputs) >= bs_put(inputs) - 1e-12


def test_corridor_value_limits():
    """Equal strikes give zero; deep in the money gives the discounted width."""
    assert corridor_value(0.0125, 0.01, 0.01, 0.008, 0.6, 0.5) == pytest.approx(0.0, abs=1e-15)
    deep = corridor_value(10.0, 0.0075, 0.0175, 0.008, 0.6, 0.5)
    assert deep == pytest.approx(math.exp(-0.004) * 0.01, rel=1e-6)
    assert corridor_value(1e-6, 0.0075, 0.0175, 0.008, 0.6, 0.5) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ConfigurationError):
        corridor_value(0.0125, 0.02, 0.01, 0.008, 0.6, 0.5)


def test_corridor_value_is_monotone_in_spot():
    values = corridor_value(np.linspace(0.001, 0.05, 50), 0.0075, 0.0175, 0.008, 0.6, 0.5)
    assert np.all(np.diff(values) >= 0)


def test_binomial_tree_close_to_published_numeric_price():
    """4000-step tree for T = 0.25, S0 = K = 100."""
    inputs = _table_inputs(0.25, 100)
    price = binomial_american_put(inputs, 4000)
    assert price == pytest.approx(3.229, abs=0.02)
    assert price >= bs_put(inputs)


def test_binomial_tree_without_rates_has_no_early_exercise():
    """r = 0: American and European trees agree."""
    inputs = AnalyticInputs(100, 100, 0.0, 0.2, 0.5)
    american = binomial_american_put(inputs, 500)
    european = binomial_american_put(inputs, 500, american=False)
    assert american == pytest.approx(european, rel=1e-12)
    assert european == pytest.approx(bs_put(inputs), abs=0.02)


def test_binomial_tree_floor():
    inputs = _table_inputs(0.25, 80)
    assert binomial_american_put(inputs, 200) >= 20.0 - 1e-12
    with pytest.raises(ConfigurationError):
        binomial_american_put(inputs, 0)


def test_analytic_inputs_validation():
    with pytest.raises(ConfigurationError):
        AnalyticInputs(-1.0, 100, 0.05, 0.2, 1.0)
    with pytest.raises(ConfigurationError):
        AnalyticInputs(100, 100, 0.05, 0.0, 1.0)
    with pytest.raises(ConfigurationError):
        AnalyticInputs(100, 100, float("nan"), 0.2, 1.0)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
