"""INI run configuration validated with pydantic.

    [instrument]  kind, tenure, strike | lower_strike + upper_strike, notional
    [market]      r, sigma, spot
    [numerics]    lambda_squared, target_courant | n_t, n_iterations, option flags, s_min, s_max
    [sweep]       fixed_values, abscissa          (convergence runs only)
    [output]      path, precision
"""
from __future__ import annotations

import configparser
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, ValidationError, field_validator, model_validator

from mpdata_pricing.config import Config
from mpdata_pricing.errors import ConfigurationError, PricingError
from mpdata_pricing.finmodel import (
    InstrumentKind,
    InstrumentSpec,
    MarketParams,
    Resolution,
    default_domain,
    resolution_for_step_count,
    size_grid,
)
from mpdata_pricing.mpdata import MpdataOptions


def _split_floats(value):
    if isinstance(value, str):
        return [float(item) for item in value.replace(";", ",").split(",") if item.strip()]
    return value


class InstrumentBlock(BaseModel):
    kind: InstrumentKind
    tenure: float
    strike: Optional[float] = None
    lower_strike: Optional[float] = None
    upper_strike: Optional[float] = None
    notional: float = 1.0


class MarketBlock(BaseModel):
    r: float
    sigma: float
    spot: float


class NumericsBlock(BaseModel):
    lambda_squared: float = 2.0
    target_courant: Optional[float] = None
    n_t: Optional[int] = None
    n_iterations: int = 2
    non_oscillatory: bool = True
    infinite_gauge: bool = True
    third_order: bool = True
    divergent_flow: bool = False
    s_min: Optional[float] = None
    s_max: Optional[float] = None

    @model_validator(mode="after")
    def one_sizing_rule(self):
        if self.target_courant is not None and self.n_t is not None:
            raise ValueError("set at most one of target_courant and n_t")
        if (self.s_min is None) != (self.s_max is None):
            raise ValueError("s_min and s_max must be given together")
        return self


class SweepBlock(BaseModel):
    fixed_values: list[float]
    abscissa: list[float]

    @field_validator("fixed_values", "abscissa", mode="before")
    @classmethod
    def split_lists(cls, value):
        return _split_floats(value)

    @field_validator("fixed_values", "abscissa")
    @classmethod
    def non_empty_positive(cls, values: list[float]) -> list[float]:
        if not values:
            raise ValueError("list must not be empty")
        if any(v <= 0 for v in values):
            raise ValueError("values must be positive")
        return values


class OutputBlock(BaseModel):
    path: Optional[str] = None
    precision: int = Config.CSV_DIGITS


class RunConfig(BaseModel):
    instrument: InstrumentBlock
    market: MarketBlock
    numerics: NumericsBlock
    sweep: Optional[SweepBlock] = None
    output: OutputBlock = OutputBlock()

    @model_validator(mode="after")
    def check_domain_objects(self):
        # surfaces the owning modules' preconditions before any run starts
        try:
            instrument = self.instrument_spec()
            params = self.market_params()
            self.mpdata_options()
        except PricingError as exc:
            raise ValueError(str(exc))
        s_min, s_max = self.domain(instrument, params)
        if not 0 < s_min < s_max:
            raise ValueError(f"domain must satisfy 0 < s_min < s_max, got ({s_min}, {s_max})")
        if not self.market.spot > 0:
            raise ValueError(f"spot must be positive, got {self.market.spot}")
        if instrument.is_american and not s_min < self.market.spot < s_max:
            raise ValueError(f"spot {self.market.spot} lies outside the domain ({s_min}, {s_max})")
        return self

    def instrument_spec(self) -> InstrumentSpec:
        block = self.instrument
        return InstrumentSpec(block.kind, block.tenure, strike=block.strike, lower_strike=block.lower_strike,
                              upper_strike=block.upper_strike, notional=block.notional)

    def market_params(self) -> MarketParams:
        return MarketParams(self.market.r, self.market.sigma)

    def mpdata_options(self) -> MpdataOptions:
        n = self.numerics
        return MpdataOptions(n_iterations=n.n_iterations, non_oscillatory=n.non_oscillatory,
                             infinite_gauge=n.infinite_gauge, third_order=n.third_order,
                             divergent_flow=n.divergent_flow)

    def domain(self, instrument: Optional[InstrumentSpec] = None,
               params: Optional[MarketParams] = None) -> tuple[float, float]:
        if self.numerics.s_min is not None:
            return self.numerics.s_min, self.numerics.s_max
        return default_domain(instrument or self.instrument_spec(), params or self.market_params())

    def resolution(self) -> Resolution:
        if self.numerics.target_courant is None and self.numerics.n_t is None:
            raise ConfigurationError("[numerics] needs target_courant or n_t")
        instrument, params = self.instrument_spec(), self.market_params()
        anchor = self.market.spot if instrument.is_american else None
        domain = self.domain(instrument, params)
        if self.numerics.n_t is not None:
            return resolution_for_step_count(self.numerics.n_t, self.numerics.lambda_squared, params,
                                             instrument.tenure, domain, anchor)
        return size_grid(self.numerics.target_courant, self.numerics.lambda_squared, params,
                         instrument.tenure, domain, anchor)


def load_run_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigurationError(f"cannot parse {path}: {exc}")
    sections = {name: dict(parser.items(name)) for name in parser.sections()}
    try:
        return RunConfig.model_validate(sections)
    except ValidationError as exc:
        raise ConfigurationError(f"invalid config {path}:\n{exc}")
