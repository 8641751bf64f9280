#!/usr/bin/env python3
"""Tests for the American put (LCP projection after every step)."""

import math

import numpy as np
import pytest

from mpdata_pricing.american import ExerciseConstraint, ExerciseHook, exercise_source, lcp_step, price_american
from mpdata_pricing.analysis import TABLE_COURANTS, american_table
from mpdata_pricing.errors import ConfigurationError, GridMismatchError
from mpdata_pricing.finmodel import InstrumentSpec, MarketParams, default_domain, size_grid, terminal_condition
from mpdata_pricing.mpdata import ScalarField
from mpdata_pricing.oracles import AnalyticInputs, american_put_reference, binomial_american_put
from mpdata_pricing.transport import BoundaryKind, TransportProblem, TransportSolver


def _resolution(params, instrument, courant, spot):
    return size_grid(courant, 2.0, params, instrument.tenure, default_domain(instrument, params), anchor=spot)


def test_lcp_step_leaves_values_above_floor():
    psi = ScalarField.from_interior([5.0, 6.0, 7.0])
    floor = ScalarField.from_interior([1.0, 2.0, 3.0])
    assert np.array_equal(lcp_step(psi, floor, 0.01).interior, [5.0, 6.0, 7.0])
    assert np.array_equal(exercise_source(psi, floor, 0.01), [0.0, 0.0, 0.0])


def test_lcp_step_lifts_values_to_floor():
    psi = ScalarField.from_interior([1.0, 6.0, 0.5])
    floor = ScalarField.from_interior([2.0, 2.0, 3.0])
    assert np.array_equal(lcp_step(psi, floor, 0.1).interior, [2.0, 6.0, 3.0])
    assert np.allclose(exercise_source(psi, floor, 0.1), [10.0, 0.0, 25.0])


def test_lcp_step_rejects_mismatched_sizes():
    with pytest.raises(GridMismatchError):
        lcp_step(ScalarField.from_interior(np.ones(4)), ScalarField.from_interior(np.ones(5)), 0.01)


def test_discounted_intrinsic_shrinks_with_time():
    constraint = ExerciseConstraint(100.0, 0.08, np.log([80.0, 100.0, 120.0]), 2)
    now = constraint.discounted_intrinsic(0.0).interior
    later = constraint.discounted_intrinsic(1.0).interior
    assert np.allclose(now, [20.0, 0.0, 0.0])
    assert np.all(later <= now)
    assert later[0] == pytest.approx(20 * math.exp(-0.08))


def test_exercise_hook_bookkeeping():
    constraint = ExerciseConstraint(100.0, 0.0, np.log([80.0, 100.0, 120.0]), 2)
    hook = ExerciseHook(constraint, 0.1)
    result = hook(0, 0.0, ScalarField.from_interior([15.0, 1.0, 0.0]))
    assert np.allclose(result.interior, [20.0, 1.0, 0.0])
    assert hook.exercise_counts().tolist() == [1]
    assert hook.floor_violations == 0


def test_atm_price_matches_reference(table_market):
    """T = 0.25, S0 = K = 100 at C ~ 0.005."""
    instrument = InstrumentSpec.american_put(100, 0.25)
    resolution = _resolution(table_market, instrument, 0.005, 100)
    result = price_american(instrument, table_market, resolution, spot=100, with_european=True)
    assert result.price == pytest.approx(3.229, abs=0.03)
    binomial = binomial_american_put(AnalyticInputs(100, 100, 0.08, 0.2, 0.25), 2000)
    assert result.price == pytest.approx(binomial, abs=0.03)
    assert result.price >= result.metadata["european_price"]


def test_american_dominates_intrinsic_and_european(table_market):
    instrument = InstrumentSpec.american_put(100, 0.5)
    resolution = _resolution(table_market, instrument, 0.02, 90)
    result = price_american(instrument, table_market, resolution, spot=90, with_european=True)
    intrinsic = np.maximum(100 - np.exp(result.grid.cell_centers()), 0)
    assert np.all(result.field.interior >= intrinsic)
    assert result.price >= result.metadata["european_price"]
    assert result.price >= 10.0 - 1e-9
    counts = result.metadata["exercise_counts"]
    assert counts.size == resolution.n_t
    assert counts.sum() > 0


def test_deep_in_the_money_row(table_market):
    """S0 = 80: exercise is optimal now."""
    instrument = InstrumentSpec.american_put(100, 0.25)
    result = price_american(instrument, table_market, _resolution(table_market, instrument, 0.02, 80), spot=80)
    assert result.price >= 20.0 - 1e-9
    assert result.price == pytest.approx(20.0, abs=0.01)


def test_zero_rate_american_equals_european():
    """r = 0: no early exercise premium."""
    params = MarketParams(0.0, 0.2)
    instrument = InstrumentSpec.american_put(100, 0.25)
    resolution = _resolution(params, instrument, 0.01, 100)
    result = price_american(instrument, params, resolution, spot=100, with_european=True)
    assert result.price == pytest.approx(result.metadata["european_price"], abs=1e-9)
    assert result.metadata["early_exercise"] is False
    assert result.metadata["exercise_counts"].size == 0


def test_projection_takes_exactly_one_branch(table_market):
    """Every cell ends on the floor when exercised and on the MPDATA value otherwise."""
    instrument = InstrumentSpec.american_put(100, 0.25)
    grid = _resolution(table_market, instrument, 0.02, 100).grid()
    problem = TransportProblem(table_market.u, table_market.nu, grid, BoundaryKind.LOG_LINEAR)
    terminal = terminal_condition(instrument, table_market, grid)
    constraint = ExerciseConstraint(100.0, table_market.r, grid.cell_centers(), terminal.halo)
    hook = ExerciseHook(constraint, grid.delta_t)
    steps = []

    def recording_hook(step, t_next, psi_star):
        result = hook(step, t_next, psi_star)
        floor = constraint.discounted_intrinsic(t_next).interior
        steps.append((psi_star.interior.copy(), floor, result.interior.copy(), hook.exercised[-1]))
        return result

    TransportSolver(problem).run(terminal, recording_hook)
    assert len(steps) == grid.n_t
    for psi_star, floor, result, exercised in steps:
        assert np.array_equal(result[exercised], floor[exercised])
        assert np.array_equal(result[~exercised], psi_star[~exercised])
        assert np.all(result >= floor)
    assert sum(int(mask.sum()) for *_, mask in steps) > 0
    assert hook.floor_violations == 0


@pytest.mark.slow
def test_full_reference_table():
    """All fifteen rows: published price, binomial tree and error trend across C."""
    table = american_table(TABLE_COURANTS, binomial_steps=4000)
    reference = american_put_reference()
    assert len(table) == len(reference) == 15
    columns = [f"log2E_C{c:g}" for c in TABLE_COURANTS]
    for row, published in zip(table.to_dict("records"), reference.itertuples(index=False)):
        assert (row["T"], row["S0"]) == (published.T, published.S0)
        assert row["f"] == pytest.approx(published.numeric, abs=0.05)
        assert row["f"] == pytest.approx(row["binomial"], abs=0.02)
        errors = [row[column] for column in columns]
        for coarse, fine in zip(errors, errors[1:]):
            assert fine <= coarse - 0.7


def test_error_falls_as_courant_halves():
    """log2(E) against the flat-boundary reference drops with each halving of C."""
    table = american_table((0.02, 0.01), rows=[(0.25, 100)], binomial_steps=0, workers=1)
    row = table.iloc[0]
    assert row["log2E_C0.01"] <= row["log2E_C0.02"] - 0.7
    assert row["bs93_floored"] >= row["bs93"]
    assert "binomial" not in table.columns


def test_price_american_needs_aligned_grid(table_market):
    instrument = InstrumentSpec.american_put(100, 0.25)
    resolution = size_grid(0.02, 2.0, table_market, 0.25, default_domain(instrument, table_market))
    spot = math.exp(resolution.x_min + 10.25 * resolution.delta_x)
    with pytest.raises(ConfigurationError):
        price_american(instrument, table_market, resolution, spot=spot)


def test_price_american_rejects_european_kind(table_market):
    corridor = InstrumentSpec.corridor(90, 110, tenure=0.25)
    resolution = size_grid(0.02, 2.0, table_market, 0.25, (0.5, 500), anchor=100)
    with pytest.raises(ConfigurationError):
        price_american(corridor, table_market, resolution, spot=100)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
