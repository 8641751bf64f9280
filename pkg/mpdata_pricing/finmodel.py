"""Financial layer: log-price substitution, payoffs, grid sizing and price extraction.

With x = ln S and psi = exp(-r t) f, the Black-Scholes equation becomes

    d(psi)/dt + u d(psi)/dx + nu d2(psi)/dx2 = 0,   u = r - sigma^2/2,  nu = -sigma^2/2

which transport.py integrates from t = T back to t = 0.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field as dataclass_field
from enum import Enum
from typing import Optional

import numpy as np
import pandas as pd

from mpdata_pricing.config import Config
from mpdata_pricing.errors import ConfigurationError, StabilityError
from mpdata_pricing.mpdata import HALO, MpdataOptions, ScalarField
from mpdata_pricing.oracles import corridor_value
from mpdata_pricing.transport import (
    BoundaryKind,
    GridSpec,
    StabilityReport,
    TransportProblem,
    TransportSolver,
    check_stability,
)

logger = logging.getLogger(__name__)

MIN_LAMBDA_SQUARED = 2.0
NODE_TOLERANCE = 1e-9
DRIFT_TOLERANCE = 1e-12


class InstrumentKind(str, Enum):
    CORRIDOR = "corridor"
    CALL = "call"
    PUT = "put"
    FORWARD = "forward"
    AMERICAN_PUT = "american_put"


@dataclass(frozen=True)
class MarketParams:
    r: float
    sigma: float

    def __post_init__(self):
        if not math.isfinite(self.r):
            raise ConfigurationError(f"r must be finite, got {self.r}")
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise ConfigurationError(f"sigma must be positive, got {self.sigma}")

    @property
    def u(self) -> float:
        return transform_params(self.r, self.sigma)[0]

    @property
    def nu(self) -> float:
        return transform_params(self.r, self.sigma)[1]


def transform_params(r: float, sigma: float) -> tuple[float, float]:
    if not sigma > 0:
        raise ConfigurationError(f"sigma must be positive, got {sigma}")
    return r - sigma ** 2 / 2, -sigma ** 2 / 2


@dataclass(frozen=True)
class InstrumentSpec:
    kind: InstrumentKind
    tenure: float
    strike: Optional[float] = None
    lower_strike: Optional[float] = None
    upper_strike: Optional[float] = None
    notional: float = 1.0

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", InstrumentKind(self.kind))
        except ValueError:
            raise ConfigurationError(f"unknown instrument kind: {self.kind!r}")
        if not self.tenure > 0:
            raise ConfigurationError(f"tenure must be positive, got {self.tenure}")
        if not self.notional > 0:
            raise ConfigurationError(f"notional must be positive, got {self.notional}")
        if self.kind is InstrumentKind.CORRIDOR:
            if self.lower_strike is None or self.upper_strike is None:
                raise ConfigurationError("corridor needs lower_strike and upper_strike")
            if not self.upper_strike > self.lower_strike > 0:
                raise ConfigurationError(
                    f"corridor needs upper_strike > lower_strike > 0, got "
                    f"({self.lower_strike}, {self.upper_strike})"
                )
        elif self.strike is None or not self.strike > 0:
            raise ConfigurationError(f"{self.kind.value} needs a positive strike, got {self.strike}")

    @classmethod
    def corridor(cls, lower_strike: float, upper_strike: float, tenure: float,
                 notional: float = 1.0) -> "InstrumentSpec":
        return cls(InstrumentKind.CORRIDOR, tenure, lower_strike=lower_strike,
                   upper_strike=upper_strike, notional=notional)

    @classmethod
    def american_put(cls, strike: float, tenure: float, notional: float = 1.0) -> "InstrumentSpec":
        return cls(InstrumentKind.AMERICAN_PUT, tenure, strike=strike, notional=notional)

    @property
    def strikes(self) -> tuple[float, ...]:
        if self.kind is InstrumentKind.CORRIDOR:
            return (self.lower_strike, self.upper_strike)
        return (self.strike,)

    @property
    def is_american(self) -> bool:
        return self.kind is InstrumentKind.AMERICAN_PUT


def payoff(instrument: InstrumentSpec, S):
    """Payoff at expiry for unit notional."""
    S = np.asarray(S, dtype=float)
    kind = instrument.kind
    if kind is InstrumentKind.CORRIDOR:
        return np.maximum(S - instrument.lower_strike, 0) - np.maximum(S - instrument.upper_strike, 0)
    if kind is InstrumentKind.CALL:
        return np.maximum(S - instrument.strike, 0)
    if kind in (InstrumentKind.PUT, InstrumentKind.AMERICAN_PUT):
        return np.maximum(instrument.strike - S, 0)
    return S - instrument.strike


@dataclass(frozen=True)
class Resolution:
    target_courant: float
    lambda_squared: float
    delta_x: float
    delta_t: float
    n_x: int
    n_t: int
    x_min: float
    domain: tuple[float, float]
    courant: float

    def grid(self) -> GridSpec:
        return GridSpec(self.x_min, self.delta_x, self.n_x, self.delta_t, self.n_t)

    def summary(self) -> str:
        return (f"C={self.courant:.6g} (target {self.target_courant:.6g}), lambda^2={self.lambda_squared:.6g}, "
                f"dx={self.delta_x:.6g}, dt={self.delta_t:.6g}, n_x={self.n_x}, n_t={self.n_t}, "
                f"S in ({self.domain[0]:.6g}, {self.domain[1]:.6g})")


def default_domain(instrument: InstrumentSpec, params: MarketParams,
                   m: float = Config.DOMAIN_SIGMAS) -> tuple[float, float]:
    if instrument.is_american:
        return instrument.strike / 200, instrument.strike * 5
    spread = math.exp(m * params.sigma * math.sqrt(instrument.tenure))
    strikes = instrument.strikes
    return strikes[0] / spread, strikes[-1] * spread


def _check_domain(domain: tuple[float, float]) -> tuple[float, float]:
    s_min, s_max = domain
    if not 0 < s_min < s_max:
        raise ConfigurationError(f"domain must satisfy 0 < S_min < S_max, got {domain}")
    return float(s_min), float(s_max)


def _layout(delta_x: float, domain: tuple[float, float], anchor: Optional[float]) -> tuple[float, int]:
    s_min, s_max = _check_domain(domain)
    x_lo, x_hi = math.log(s_min), math.log(s_max)
    if anchor is None:
        return x_lo, math.ceil((x_hi - x_lo) / delta_x - NODE_TOLERANCE)
    if not s_min < anchor < s_max:
        raise ConfigurationError(f"spot {anchor} lies outside the domain {domain}")
    x_anchor = math.log(anchor)
    cells_below = math.ceil((x_anchor - x_lo) / delta_x - 0.5)
    x_min = x_anchor - (cells_below + 0.5) * delta_x
    return x_min, math.ceil((x_hi - x_min) / delta_x - NODE_TOLERANCE)


def size_grid(target_courant: float, lambda_squared: float, params: MarketParams, T: float,
              domain: tuple[float, float], anchor: Optional[float] = None) -> Resolution:
    """Pick (dx, dt) from a Courant target at fixed lambda^2 = dx^2 / (sigma^2 dt).

    dt is adjusted so that T is an integer number of steps, and dx is then
    recomputed so that lambda^2 holds exactly. With `anchor`, a cell centre
    falls on ln(anchor).
    """
    if not target_courant > 0:
        raise ConfigurationError(f"target Courant number must be positive, got {target_courant}")
    if not lambda_squared > 0:
        raise ConfigurationError(f"lambda^2 must be positive, got {lambda_squared}")
    if lambda_squared < MIN_LAMBDA_SQUARED:
        raise StabilityError(f"lambda^2 = {lambda_squared} is below the stability bound {MIN_LAMBDA_SQUARED}")
    if not T > 0:
        raise ConfigurationError(f"tenure must be positive, got {T}")
    speed = abs(params.u)
    variance = params.sigma ** 2
    if speed <= DRIFT_TOLERANCE * max(abs(params.r), variance):
        raise ConfigurationError(f"u = {params.u:.3g} is zero to rounding: Courant targeting is undefined, "
                                 f"use resolution_from_steps")

    delta_x = lambda_squared * variance * target_courant / speed
    delta_t = target_courant * delta_x / speed
    n_t = max(1, round(T / delta_t))
    delta_t = T / n_t
    delta_x = math.sqrt(lambda_squared * variance * delta_t)

    x_min, n_x = _layout(delta_x, domain, anchor)
    return Resolution(
        target_courant=target_courant,
        lambda_squared=delta_x ** 2 / (variance * delta_t),
        delta_x=delta_x,
        delta_t=delta_t,
        n_x=n_x,
        n_t=n_t,
        x_min=x_min,
        domain=_check_domain(domain),
        courant=speed * delta_t / delta_x,
    )


def resolution_from_steps(delta_x: float, n_t: int, params: MarketParams, T: float,
                          domain: tuple[float, float], anchor: Optional[float] = None) -> Resolution:
    """Resolution for an explicit grid step and step count (no Courant targeting)."""
    if not delta_x > 0:
        raise ConfigurationError(f"delta_x must be positive, got {delta_x}")
    if int(n_t) != n_t or n_t < 1:
        raise ConfigurationError(f"n_t must be an integer >= 1, got {n_t}")
    if not T > 0:
        raise ConfigurationError(f"tenure must be positive, got {T}")
    delta_t = T / n_t
    x_min, n_x = _layout(delta_x, domain, anchor)
    courant = abs(params.u) * delta_t / delta_x
    return Resolution(
        target_courant=courant,
        lambda_squared=delta_x ** 2 / (params.sigma ** 2 * delta_t),
        delta_x=delta_x,
        delta_t=delta_t,
        n_x=n_x,
        n_t=int(n_t),
        x_min=x_min,
        domain=_check_domain(domain),
        courant=courant,
    )


def resolution_for_step_count(n_t: int, lambda_squared: float, params: MarketParams, T: float,
                              domain: tuple[float, float], anchor: Optional[float] = None) -> Resolution:
    if lambda_squared < MIN_LAMBDA_SQUARED:
        raise StabilityError(f"lambda^2 = {lambda_squared} is below the stability bound {MIN_LAMBDA_SQUARED}")
    delta_x = math.sqrt(lambda_squared * params.sigma ** 2 * T / n_t)
    return resolution_from_steps(delta_x, n_t, params, T, domain, anchor)


def terminal_condition(instrument: InstrumentSpec, params: MarketParams, grid: GridSpec) -> ScalarField:
    centers = grid.cell_centers()
    for strike in instrument.strikes:
        x_strike = math.log(strike)
        if min(x_strike - grid.x_min, grid.x_max - x_strike) < 2 * grid.delta_x:
            logger.warning(f"strike {strike} lies within 2 cells of the domain edge")
    discount = math.exp(-params.r * instrument.tenure)
    return ScalarField.from_interior(discount * payoff(instrument, np.exp(centers)), HALO)


def spot_index(grid: GridSpec, S0: float) -> Optional[int]:
    """Index of the cell whose centre is ln(S0), or None when S0 falls between centres."""
    if not S0 > 0:
        raise ConfigurationError(f"spot must be positive, got {S0}")
    position = (math.log(S0) - grid.x_min) / grid.delta_x - 0.5
    nearest = round(position)
    if abs(position - nearest) <= NODE_TOLERANCE and 0 <= nearest < grid.n_x:
        return nearest
    return None


def extract_price(field: ScalarField, grid: GridSpec, S0: float) -> float:
    index = spot_index(grid, S0)
    if index is not None:
        return float(field.interior[index])
    centers = grid.cell_centers()
    x0 = math.log(S0)
    if not centers[0] <= x0 <= centers[-1]:
        raise ConfigurationError(f"spot {S0} lies outside the grid interior")
    return float(np.interp(x0, centers, field.interior))


@dataclass
class PricingResult:
    price: float
    instrument: InstrumentSpec
    params: MarketParams
    spot: float
    field: ScalarField
    terminal: ScalarField
    resolution: Resolution
    stability: StabilityReport
    metadata: dict = dataclass_field(default_factory=dict)

    @property
    def value(self) -> float:
        """Price scaled by the notional."""
        return self.price * self.instrument.notional

    @property
    def grid(self) -> GridSpec:
        return self.resolution.grid()


def default_boundary(instrument: InstrumentSpec) -> BoundaryKind:
    """Log-linear edges for the forward, whose shifted value is exp(x) times a constant."""
    if instrument.kind is InstrumentKind.FORWARD:
        return BoundaryKind.LOG_LINEAR
    return BoundaryKind.OPEN


def transport_offset(instrument: InstrumentSpec, params: MarketParams) -> float:
    """Constant added to psi before transport so that the field stays positive.

    Constants solve the transport equation exactly, so the offset is removed
    again after the last step. Only the forward, whose payoff changes sign,
    needs one: K exp(-rT) turns its terminal psi into exp(-rT) S.
    """
    if instrument.kind is InstrumentKind.FORWARD:
        return instrument.strike * math.exp(-params.r * instrument.tenure)
    return 0.0


def price_european(instrument: InstrumentSpec, params: MarketParams, resolution: Resolution,
                   options: Optional[MpdataOptions] = None, *, spot: float,
                   boundary: Optional[BoundaryKind] = None, allow_unstable: bool = False) -> PricingResult:
    if instrument.is_american:
        raise ConfigurationError("american instruments are priced with american.price_american")
    options = options or MpdataOptions()
    boundary = default_boundary(instrument) if boundary is None else BoundaryKind(boundary)
    grid = resolution.grid()
    problem = TransportProblem(params.u, params.nu, grid, boundary)
    terminal = terminal_condition(instrument, params, grid)
    offset = transport_offset(instrument, params)
    solver = TransportSolver(problem, options, allow_unstable=allow_unstable)
    shifted = solver.run(terminal.with_interior(terminal.interior + offset))
    solution = ScalarField(shifted.values - offset, shifted.halo)
    price = extract_price(solution, grid, spot)
    logger.info(f"{instrument.kind.value} priced at {price:.6g} with {options.scheme} ({resolution.summary()})")
    return PricingResult(
        price=price,
        instrument=instrument,
        params=params,
        spot=spot,
        field=solution,
        terminal=terminal,
        resolution=resolution,
        stability=check_stability(problem, params.sigma),
        metadata={
            "options": options.as_dict(),
            "boundary": boundary.value,
            "boundary_fallbacks": dict(solver.fallbacks),
            "offset": offset,
        },
    )


def corridor_profile(result: PricingResult) -> pd.DataFrame:
    """Per-cell terminal, numerical and analytic values of a corridor run."""
    instrument, params = result.instrument, result.params
    if instrument.kind is not InstrumentKind.CORRIDOR:
        raise ConfigurationError("corridor_profile needs a corridor result")
    x = result.grid.cell_centers()
    S = np.exp(x)
    analytic = corridor_value(S, instrument.lower_strike, instrument.upper_strike,
                              params.r, params.sigma, instrument.tenure)
    numeric = result.field.interior
    return pd.DataFrame({
        "x": x,
        "S": S,
        "psi_terminal": result.terminal.interior,
        "psi_numeric": numeric,
        "psi_analytic": analytic,
        "error": numeric - analytic,
    })
