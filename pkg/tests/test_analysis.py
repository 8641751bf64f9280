#!/usr/bin/env python3
"""Tests for the error measure, order fits and convergence sweeps."""

import math

import numpy as np
import pytest

from mpdata_pricing.analysis import (
    SPATIAL_COURANTS,
    SPATIAL_LAMBDAS,
    TEMPORAL_COURANTS,
    TEMPORAL_LAMBDAS,
    ConvergencePoint,
    error_measure,
    corridor_instrument,
    corridor_market,
    fit_order,
    order_report,
    sweep_spatial,
    sweep_temporal,
)
from mpdata_pricing.errors import GridMismatchError, InsufficientDataError
from mpdata_pricing.finmodel import Resolution
from mpdata_pricing.mpdata import MpdataOptions


def _resolution(n_t=10, courant=0.01, lambda_squared=2.0):
    return Resolution(courant, lambda_squared, 0.1, 0.01, 50, n_t, 0.0, (1.0, 100.0), courant)


def _points(slope, n=5, scheme="mpdata", n_t=10):
    return [ConvergencePoint(float(k), slope * k + 1.0, scheme, _resolution(n_t)) for k in range(n)]


def test_error_measure_examples():
    """Zero for identical fields, |delta| / sqrt(n_t) for a uniform offset."""
    analytic = np.linspace(0, 1, 40)
    assert error_measure(analytic, analytic, 40, 10) == 0.0
    assert error_measure(analytic + 0.3, analytic, 40, 9) == pytest.approx(0.1, rel=1e-12)


def test_error_measure_rejects_mismatch():
    with pytest.raises(GridMismatchError):
        error_measure(np.zeros(10), np.zeros(11), 10, 5)


def test_convergence_point_rejects_non_finite():
    with pytest.raises(ValueError):
        ConvergencePoint(1.0, float("-inf"), "mpdata", _resolution())


def test_fit_order_recovers_exact_slope():
    assert fit_order(_points(2.0)) == pytest.approx(2.0, rel=1e-12)
    assert fit_order(_points(-1.0)) == pytest.approx(-1.0, rel=1e-12)


def test_fit_order_needs_three_points():
    with pytest.raises(InsufficientDataError):
        fit_order(_points(2.0, n=2))


def test_fit_order_skips_short_runs():
    """Points with fewer than four steps are left out."""
    points = _points(2.0, n=3) + [ConvergencePoint(10.0, 100.0, "mpdata", _resolution(n_t=2))]
    assert fit_order(points) == pytest.approx(2.0, rel=1e-12)
    with pytest.raises(InsufficientDataError):
        fit_order(_points(2.0, n=4, n_t=3))


def test_order_report_groups_by_scheme():
    report = order_report(_points(1.0, scheme="upwind") + _points(2.0))
    assert list(report.columns) == ["scheme", "lambda2", "points", "slope", "order"]
    assert report["scheme"].tolist() == ["upwind", "mpdata"]
    assert report["slope"].tolist() == pytest.approx([1.0, 2.0])
    assert report["order"].tolist() == pytest.approx([1.0, 2.0])


def test_corridor_presets():
    assert corridor_market().u == pytest.approx(-0.172)
    assert corridor_instrument().strikes == (0.0075, 0.0175)


def test_spatial_sweep_mpdata_beats_upwind():
    """At every C the corrected scheme has the smaller error and the steeper slope."""
    points = sweep_spatial(2.0, (0.01, 0.02, 0.04), workers=2)
    assert [p.scheme for p in points] == ["upwind", "mpdata"] * 3
    assert [p.log2_abscissa for p in points] == pytest.approx([math.log2(p.config.courant) for p in points])
    assert [round(p.config.courant, 2) for p in points[::2]] == [0.01, 0.02, 0.04]
    for upwind, mpdata in zip(points[::2], points[1::2]):
        assert mpdata.log2_error < upwind.log2_error
    assert fit_order(points[1::2]) > fit_order(points[::2])


def test_sweeps_are_deterministic():
    """Worker count does not change the output."""
    first = sweep_spatial(4.0, (0.02, 0.04), workers=1)
    second = sweep_spatial(4.0, (0.02, 0.04), workers=3)
    assert [p.as_row() for p in first] == [p.as_row() for p in second]


def test_temporal_sweep_skips_unstable_lambda():
    """lambda^2 below 2 is left out with a warning."""
    points = sweep_temporal(0.02, (1.0, 2.0, 4.0), include_upwind=False)
    assert [p.scheme for p in points] == ["mpdata", "mpdata"]
    assert [p.log2_abscissa for p in points] == pytest.approx([1.0, 2.0])
    report = order_report(points, group_by="courant")
    assert report["courant"].tolist() == [0.02]
    assert math.isnan(report["slope"].iloc[0])


def test_sweep_honours_options():
    options = MpdataOptions.basic(3)
    points = sweep_spatial(2.0, (0.04,), options, include_upwind=False)
    assert len(points) == 1
    assert points[0].scheme == "mpdata"


def test_order_removes_step_count_growth():
    """E ~ C^3 with n_t ~ C^-2 is a second-order scheme."""
    points = [
        ConvergencePoint(-float(k), 1.0 - 3.0 * k, "mpdata", _resolution(n_t=64 * 4 ** k))
        for k in range(4)
    ]
    assert fit_order(points) == pytest.approx(3.0, rel=1e-12)
    assert fit_order(points, "log2_rms") == pytest.approx(2.0, rel=1e-12)
    assert points[1].log2_rms == pytest.approx(-2.0 + 0.5 * math.log2(256))
    with pytest.raises(ValueError):
        fit_order(points, "log2_courant")


def test_sweep_skips_grids_with_too_few_cells():
    """lambda^2 = 16 at C = 0.1 leaves two cells; the rest of the sweep still runs."""
    points = sweep_temporal(0.1, (2.0, 4.0, 8.0, 16.0), include_upwind=False)
    assert [p.log2_abscissa for p in points] == pytest.approx([1.0, 2.0, 3.0])
    assert all(p.config.n_x >= 4 for p in points)


def test_sweep_drops_repeated_grids():
    """C = 0.2 and 0.4 both round to a single step and one grid."""
    points = sweep_spatial(2.0, (0.2, 0.4), include_upwind=False)
    assert len(points) == 1
    assert points[0].config.n_t == 1
    assert points[0].config.courant == pytest.approx(0.172 * 0.5 / math.sqrt(2 * 0.36 * 0.5))


ORDER_WINDOWS = {
    "space": {"mpdata": (1.7, 2.3), "upwind": (0.7, 1.3)},
    "time": {"mpdata": (1.7, 2.3), "upwind": (0.0, 1.0)},
}


@pytest.mark.slow
@pytest.mark.parametrize("axis", ["space", "time"])
def test_shipped_sweeps_reach_expected_orders(axis):
    """Default grids give second order for MPDATA and at most first order for upwind."""
    if axis == "space":
        points = [p for lam in SPATIAL_LAMBDAS for p in sweep_spatial(lam)]
        report = order_report(points, group_by="lambda2")
    else:
        points = [p for c in TEMPORAL_COURANTS for p in sweep_temporal(c)]
        report = order_report(points, group_by="courant")
    assert len(report) == 6
    for row in report.to_dict("records"):
        low, high = ORDER_WINDOWS[axis][row["scheme"]]
        assert low <= row["order"] <= high, row
    shared = {}
    for point in points:
        shared.setdefault((point.config.n_t, point.config.n_x), {})[point.scheme] = point.log2_error
    assert all(errors["mpdata"] < errors["upwind"] for errors in shared.values())


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
