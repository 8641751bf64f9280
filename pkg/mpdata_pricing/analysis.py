"""Error measurement, convergence sweeps and the American-put table."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
import pandas as pd

from mpdata_pricing.american import price_american
from mpdata_pricing.config import Config
from mpdata_pricing.errors import ConfigurationError, GridMismatchError, InsufficientDataError, StabilityError
from mpdata_pricing.finmodel import (
    InstrumentSpec,
    MarketParams,
    Resolution,
    default_domain,
    size_grid,
    terminal_condition,
)
from mpdata_pricing.mpdata import MpdataOptions, ScalarField
from mpdata_pricing.oracles import (
    AnalyticInputs,
    AMERICAN_PUT_REFERENCE,
    AMERICAN_PUT_MARKET,
    binomial_american_put,
    bjerksund_stensland_put,
    bs_put,
    corridor_value,
)
from mpdata_pricing.transport import BoundaryKind, TransportProblem, integrate_backward

logger = logging.getLogger(__name__)

MIN_FIT_POINTS = 3
MIN_FIT_STEPS = 4
MIN_SWEEP_CELLS = 4

SPATIAL_COURANTS = (0.00125, 0.0025, 0.005, 0.01)
SPATIAL_LAMBDAS = (2.0, 4.0, 8.0)
TEMPORAL_COURANTS = (0.0025, 0.005, 0.01)
TEMPORAL_LAMBDAS = (2.0, 4.0, 8.0, 16.0)
TABLE_COURANTS = (0.02, 0.01, 0.005)


@dataclass(frozen=True)
class ConvergencePoint:
    log2_abscissa: float
    log2_error: float
    scheme: str
    config: Resolution

    def __post_init__(self):
        if not (math.isfinite(self.log2_abscissa) and math.isfinite(self.log2_error)):
            raise ValueError(f"non-finite convergence point ({self.log2_abscissa}, {self.log2_error})")

    @property
    def log2_rms(self) -> float:
        """log2 of the cell RMS error, i.e. E without its 1/sqrt(n_t) factor."""
        return self.log2_error + 0.5 * math.log2(self.config.n_t)

    def as_row(self) -> dict:
        return {
            "scheme": self.scheme,
            "log2_abscissa": self.log2_abscissa,
            "log2_error": self.log2_error,
            "n_x": self.config.n_x,
            "n_t": self.config.n_t,
            "courant": self.config.courant,
            "lambda2": self.config.lambda_squared,
            "log2_rms": self.log2_rms,
        }


def corridor_market() -> MarketParams:
    return MarketParams(r=0.008, sigma=0.6)


def corridor_instrument() -> InstrumentSpec:
    # rates as decimals: 0.75% and 1.75%
    return InstrumentSpec.corridor(0.0075, 0.0175, tenure=0.5)


def error_measure(numeric, analytic, n_x: int, n_t: int) -> float:
    numeric = numeric.interior if isinstance(numeric, ScalarField) else np.asarray(numeric, dtype=float)
    analytic = np.asarray(analytic, dtype=float)
    if numeric.shape != analytic.shape:
        raise GridMismatchError(f"numeric has {numeric.size} cells, analytic has {analytic.size}")
    if n_x < 1 or n_t < 1:
        raise ValueError(f"n_x and n_t must be at least 1, got ({n_x}, {n_t})")
    return math.sqrt(float(np.sum((numeric - analytic) ** 2)) / (n_x * n_t))


def _corridor_error(resolution: Resolution, instrument: InstrumentSpec, params: MarketParams,
                    options: MpdataOptions) -> float:
    grid = resolution.grid()
    problem = TransportProblem(params.u, params.nu, grid, BoundaryKind.OPEN)
    solution = integrate_backward(problem, terminal_condition(instrument, params, grid), options)
    analytic = corridor_value(np.exp(grid.cell_centers()), instrument.lower_strike, instrument.upper_strike,
                              params.r, params.sigma, instrument.tenure)
    return error_measure(solution, analytic, grid.n_x, grid.n_t)


def _schemes(options: Optional[MpdataOptions], include_upwind: bool) -> list[MpdataOptions]:
    schemes = [MpdataOptions.upwind()] if include_upwind else []
    return schemes + [options or MpdataOptions()]


def _resolution_key(resolution: Resolution) -> tuple:
    return resolution.n_x, resolution.n_t, round(resolution.delta_x, 12), round(resolution.x_min, 12)


def _sweep(jobs: list[tuple[float, float]], axis: str, options: Optional[MpdataOptions], include_upwind: bool,
           instrument: InstrumentSpec, params: MarketParams, workers: int) -> list[ConvergencePoint]:
    """jobs: (courant, lambda^2) targets; output keeps job then scheme order.

    The abscissa is the realised Courant number (axis "space") or lambda^2
    (axis "time"). Targets that round to an already swept grid are dropped.
    """
    domain = default_domain(instrument, params)
    schemes = _schemes(options, include_upwind)

    resolutions = []
    seen = set()
    for courant, lambda_squared in jobs:
        try:
            resolution = size_grid(courant, lambda_squared, params, instrument.tenure, domain)
            if resolution.n_x < MIN_SWEEP_CELLS:
                raise ConfigurationError(f"{resolution.n_x} cells, transport needs {MIN_SWEEP_CELLS}")
        except (StabilityError, ConfigurationError) as exc:
            logger.warning(f"skipping configuration C={courant}, lambda^2={lambda_squared}: {exc}")
            continue
        key = _resolution_key(resolution)
        if key in seen:
            logger.info(f"C={courant}, lambda^2={lambda_squared} repeats an earlier grid ({resolution.summary()})")
            continue
        seen.add(key)
        resolutions.append(resolution)

    def run(resolution, scheme):
        try:
            error = _corridor_error(resolution, instrument, params, scheme)
        except StabilityError as exc:
            logger.warning(f"skipping unstable configuration {resolution.summary()}: {exc}")
            return None
        abscissa = resolution.courant if axis == "space" else resolution.lambda_squared
        return ConvergencePoint(math.log2(abscissa), math.log2(error), scheme.scheme, resolution)

    tasks = [(resolution, scheme) for resolution in resolutions for scheme in schemes]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        results = list(executor.map(lambda task: run(*task), tasks))
    return [point for point in results if point is not None]


def sweep_spatial(lambda_squared: float, courant_grid: Sequence[float] = SPATIAL_COURANTS,
                  options: Optional[MpdataOptions] = None, *, include_upwind: bool = True,
                  instrument: Optional[InstrumentSpec] = None, params: Optional[MarketParams] = None,
                  workers: int = Config.SWEEP_WORKERS) -> list[ConvergencePoint]:
    jobs = [(c, lambda_squared) for c in courant_grid]
    return _sweep(jobs, "space", options, include_upwind, instrument or corridor_instrument(),
                  params or corridor_market(), workers)


def sweep_temporal(courant: float, lambda_grid: Sequence[float] = TEMPORAL_LAMBDAS,
                   options: Optional[MpdataOptions] = None, *, include_upwind: bool = True,
                   instrument: Optional[InstrumentSpec] = None, params: Optional[MarketParams] = None,
                   workers: int = Config.SWEEP_WORKERS) -> list[ConvergencePoint]:
    jobs = [(courant, lam) for lam in lambda_grid]
    return _sweep(jobs, "time", options, include_upwind, instrument or corridor_instrument(),
                  params or corridor_market(), workers)


def fit_order(points: Iterable[ConvergencePoint], ordinate: str = "log2_error") -> float:
    """Least-squares slope of an ordinate against log2(abscissa).

    `ordinate` is "log2_error" for E itself or "log2_rms" for the order of
    accuracy. Points with fewer than 4 time steps are left out of the fit.
    """
    if ordinate not in ("log2_error", "log2_rms"):
        raise ValueError(f"ordinate must be 'log2_error' or 'log2_rms', got {ordinate!r}")
    usable = [p for p in points if p.config.n_t >= MIN_FIT_STEPS]
    if len(usable) < MIN_FIT_POINTS:
        raise InsufficientDataError(f"need at least {MIN_FIT_POINTS} points to fit an order, got {len(usable)}")
    x = np.array([p.log2_abscissa for p in usable])
    y = np.array([getattr(p, ordinate) for p in usable])
    if np.ptp(x) == 0:
        raise InsufficientDataError("all points share one abscissa")
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def order_report(points: Sequence[ConvergencePoint], group_by: str = "lambda2") -> pd.DataFrame:
    """Fitted slopes per (scheme, held-fixed parameter) group, in first-seen order.

    `slope` fits log2(E); `order` fits the cell RMS error, which drops the
    n_t growth that E carries as the grid is refined.
    """
    if group_by not in ("lambda2", "courant"):
        raise ValueError(f"group_by must be 'lambda2' or 'courant', got {group_by!r}")
    groups: dict[tuple[str, float], list[ConvergencePoint]] = {}
    for point in points:
        if group_by == "lambda2":
            fixed = round(point.config.lambda_squared, 9)
        else:
            fixed = point.config.target_courant
        groups.setdefault((point.scheme, fixed), []).append(point)

    rows = []
    for (scheme, fixed), members in groups.items():
        try:
            slope = fit_order(members)
            order = fit_order(members, "log2_rms")
        except InsufficientDataError:
            slope = order = float("nan")
        rows.append({"scheme": scheme, group_by: fixed, "points": len(members), "slope": slope, "order": order})
    return pd.DataFrame(rows, columns=["scheme", group_by, "points", "slope", "order"])


def _table_row(T: float, S0: float, courant_targets: Sequence[float], options: Optional[MpdataOptions],
               binomial_steps: int) -> dict:
    market = MarketParams(AMERICAN_PUT_MARKET["r"], AMERICAN_PUT_MARKET["sigma"])
    strike = AMERICAN_PUT_MARKET["K"]
    instrument = InstrumentSpec.american_put(strike, T)
    domain = default_domain(instrument, market)
    inputs = AnalyticInputs(S0, strike, market.r, market.sigma, T)

    row = {"T": T, "S0": S0}
    price = float("nan")
    for courant in courant_targets:
        resolution = size_grid(courant, 2.0, market, T, domain, anchor=S0)
        result = price_american(instrument, market, resolution, options, spot=S0)
        grid = resolution.grid()
        reference = bjerksund_stensland_put(AnalyticInputs(np.exp(grid.cell_centers()), strike,
                                                           market.r, market.sigma, T))
        error = error_measure(result.field, reference, grid.n_x, grid.n_t)
        row[f"log2E_C{courant:g}"] = math.log2(error)
        price = result.price

    bs93 = float(bjerksund_stensland_put(inputs))
    row.update({
        "f": price,
        "bs93": bs93,
        "bs93_floored": max(bs93, strike - S0),
        "european": float(bs_put(inputs)),
    })
    if binomial_steps:
        row["binomial"] = binomial_american_put(inputs, binomial_steps)
    return row


def american_table(courant_targets: Sequence[float] = TABLE_COURANTS, options: Optional[MpdataOptions] = None,
                   *, rows: Optional[Sequence[tuple[float, float]]] = None,
                   binomial_steps: int = Config.BINOMIAL_STEPS,
                   workers: int = Config.SWEEP_WORKERS) -> pd.DataFrame:
    """Numerical American-put prices with log2(E) per Courant target.

    `f` is the price at the last (finest) target.
    """
    if not courant_targets:
        raise InsufficientDataError("no Courant targets given")
    rows = rows if rows is not None else [(T, S0) for T, S0, *_ in AMERICAN_PUT_REFERENCE]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        records = list(executor.map(
            lambda row: _table_row(row[0], row[1], courant_targets, options, binomial_steps), rows))
    return pd.DataFrame(records)
