#!/usr/bin/env python3
"""Command-line entry point.

    python -m mpdata_pricing.cli price-european --config configs/corridor.ini --out corridor.csv
    python -m mpdata_pricing.cli price-american --config configs/american_put.ini
    python -m mpdata_pricing.cli convergence --axis space --config configs/convergence_space.ini
    python -m mpdata_pricing.cli table-american --out american_put.csv
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from mpdata_pricing.american import price_american
from mpdata_pricing.analysis import TABLE_COURANTS, american_table, order_report, sweep_spatial, sweep_temporal
from mpdata_pricing.config import Config
from mpdata_pricing.errors import ConfigurationError, PricingError
from mpdata_pricing.finmodel import InstrumentKind, PricingResult, corridor_profile, price_european
from mpdata_pricing.mpdata import MpdataOptions
from mpdata_pricing.oracles import (
    AnalyticInputs,
    binomial_american_put,
    bjerksund_stensland_put,
    bs_call,
    bs_put,
    corridor_value,
)
from mpdata_pricing.run_config import RunConfig, load_run_config

logger = logging.getLogger(__name__)

CSV_HEADER = ["scheme", "log2_abscissa", "log2_error", "n_x", "n_t", "courant", "lambda2", "log2_rms"]


def _options(config: Optional[RunConfig], args: argparse.Namespace) -> MpdataOptions:
    options = config.mpdata_options() if config is not None else MpdataOptions()
    if getattr(args, "scheme", None) == "upwind":
        return MpdataOptions.upwind()
    if getattr(args, "iters", None) is not None:
        options = options.with_iterations(args.iters)
    if getattr(args, "no_fct", False):
        options = replace(options, non_oscillatory=False)
    if getattr(args, "no_iga", False):
        options = replace(options, infinite_gauge=False)
    if getattr(args, "no_tot", False):
        options = replace(options, third_order=False)
    return options


def _write_csv(frame: pd.DataFrame, out: str, precision: int, trailer: tuple[str, ...] = ()) -> None:
    text = frame.to_csv(index=False, float_format=f"%.{precision}g", lineterminator="\n")
    text += "".join(f"{line}\n" for line in trailer)
    if out == "-":
        sys.stdout.write(text)
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    print(f"Wrote {path}")


def _european_reference(result: PricingResult) -> float:
    instrument, params, spot = result.instrument, result.params, result.spot
    T = instrument.tenure
    kind = instrument.kind
    if kind is InstrumentKind.CORRIDOR:
        value = corridor_value(spot, instrument.lower_strike, instrument.upper_strike, params.r, params.sigma, T)
    elif kind is InstrumentKind.CALL:
        value = bs_call(AnalyticInputs(spot, instrument.strike, params.r, params.sigma, T))
    elif kind is InstrumentKind.PUT:
        value = bs_put(AnalyticInputs(spot, instrument.strike, params.r, params.sigma, T))
    else:
        value = spot - instrument.strike * math.exp(-params.r * T)
    return float(value)


def _print_run_header(title: str, result: PricingResult) -> None:
    print("\n" + "=" * 60)
    print(title)
    print("=" * 60)
    print(f"Resolution: {result.resolution.summary()}")
    print(f"Stability:  {result.stability.summary()}")
    print(f"Options:    {result.metadata['options']}")
    print(f"Boundary:   {result.metadata['boundary']} (fallbacks: {result.metadata['boundary_fallbacks']})")


def cmd_price_european(config: RunConfig, out: Optional[str] = None,
                       options: Optional[MpdataOptions] = None) -> int:
    instrument = config.instrument_spec()
    if instrument.is_american:
        raise ConfigurationError("price-european got an american instrument; use price-american")
    result = price_european(instrument, config.market_params(), config.resolution(),
                            options or config.mpdata_options(), spot=config.market.spot)
    reference = _european_reference(result)

    _print_run_header(f"European {instrument.kind.value}", result)
    notional = instrument.notional
    if instrument.kind is InstrumentKind.CORRIDOR:
        # underlying is a rate: report in percent of notional
        print(f"Spot:       {config.market.spot * 100:.4f}%")
        print(f"Price:      {result.price * 100:.6f}% of notional ({result.value:.8g})")
        print(f"Analytic:   {reference * 100:.6f}% of notional ({reference * notional:.8g})")
        print(f"Abs error:  {abs(result.price - reference) * 100:.6f} percentage points")
    else:
        print(f"Spot:       {config.market.spot:.6g}")
        print(f"Price:      {result.value:.6f}")
        print(f"Analytic:   {reference * notional:.6f}")
        print(f"Abs error:  {abs(result.price - reference) * notional:.6g}")

    if out:
        if instrument.kind is InstrumentKind.CORRIDOR:
            frame = corridor_profile(result).drop(columns=["psi_terminal"])
        else:
            frame = _european_profile(result)
        _write_csv(frame, out, config.output.precision)
    return 0


def _european_profile(result: PricingResult) -> pd.DataFrame:
    instrument, params = result.instrument, result.params
    x = result.grid.cell_centers()
    S = np.exp(x)
    if instrument.kind is InstrumentKind.FORWARD:
        analytic = S - instrument.strike * math.exp(-params.r * instrument.tenure)
    else:
        inputs = AnalyticInputs(S, instrument.strike, params.r, params.sigma, instrument.tenure)
        analytic = bs_call(inputs) if instrument.kind is InstrumentKind.CALL else bs_put(inputs)
    numeric = result.field.interior
    return pd.DataFrame({"x": x, "S": S, "psi_numeric": numeric, "psi_analytic": analytic,
                         "error": numeric - analytic})


def cmd_price_american(config: RunConfig, out: Optional[str] = None,
                       options: Optional[MpdataOptions] = None) -> int:
    instrument = config.instrument_spec()
    if not instrument.is_american:
        raise ConfigurationError("price-american needs kind = american_put")
    params = config.market_params()
    spot = config.market.spot
    result = price_american(instrument, params, config.resolution(), options or config.mpdata_options(),
                            spot=spot, with_european=True)

    inputs = AnalyticInputs(spot, instrument.strike, params.r, params.sigma, instrument.tenure)
    bs93 = float(bjerksund_stensland_put(inputs))
    binomial = binomial_american_put(inputs, Config.BINOMIAL_STEPS)
    european = float(bs_put(inputs))

    _print_run_header(f"American put T={instrument.tenure} S0={spot} K={instrument.strike}", result)
    print(f"f(S0, 0):            {result.value:.6f}")
    print(f"BS93:                {bs93:.6f}")
    print(f"BS93 (floored):      {max(bs93, instrument.strike - spot):.6f}")
    print(f"Binomial ({Config.BINOMIAL_STEPS} steps): {binomial:.6f}")
    print(f"European (analytic): {european:.6f}")
    print(f"European (same grid): {result.metadata['european_price']:.6f}")

    if out:
        x = result.grid.cell_centers()
        S = np.exp(x)
        reference = bjerksund_stensland_put(AnalyticInputs(S, instrument.strike, params.r, params.sigma,
                                                           instrument.tenure))
        numeric = result.field.interior
        frame = pd.DataFrame({"x": x, "S": S, "psi_numeric": numeric, "psi_analytic": reference,
                              "error": numeric - reference})
        _write_csv(frame, out, config.output.precision)
    return 0


def cmd_convergence(config: RunConfig, axis: str, out: Optional[str] = None,
                    options: Optional[MpdataOptions] = None) -> int:
    if config.sweep is None:
        raise ConfigurationError("convergence needs a [sweep] section")
    instrument = config.instrument_spec()
    if instrument.kind is not InstrumentKind.CORRIDOR:
        raise ConfigurationError("convergence sweeps are defined for the corridor")
    params = config.market_params()
    options = options or config.mpdata_options()

    points = []
    for fixed in config.sweep.fixed_values:
        if axis == "space":
            points += sweep_spatial(fixed, config.sweep.abscissa, options, instrument=instrument, params=params)
        else:
            points += sweep_temporal(fixed, config.sweep.abscissa, options, instrument=instrument, params=params)

    report = order_report(points, group_by="lambda2" if axis == "space" else "courant")
    precision = config.output.precision
    fixed_name = report.columns[1]
    trailer = tuple(
        f"# slope scheme={scheme} {fixed_name}={fixed:.{precision}g} points={count} value={slope:.{precision}g} "
        f"order={order:.{precision}g}"
        for scheme, fixed, count, slope, order in report.itertuples(index=False, name=None)
    )
    frame = pd.DataFrame([p.as_row() for p in points], columns=CSV_HEADER)
    print(report.to_string(index=False), file=sys.stderr)
    _write_csv(frame, out or config.output.path or "-", precision, trailer)
    return 0


def cmd_table_american(courants=TABLE_COURANTS, out: Optional[str] = None,
                       options: Optional[MpdataOptions] = None) -> int:
    table = american_table(courants, options)
    print("\n" + table.to_string(index=False, float_format=lambda v: f"{v:.3f}"))
    if out:
        _write_csv(table, out, Config.CSV_DIGITS)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mpdata-pricing", description="MPDATA option pricing")
    commands = parser.add_subparsers(dest="command", required=True)

    def add_common(sub, needs_config=True):
        sub.add_argument("--config", type=str, required=needs_config, help="INI run configuration")
        sub.add_argument("--out", type=str, default=None, help="CSV output path ('-' for stdout)")
        sub.add_argument("--scheme", choices=["upwind", "mpdata"], default=None)
        sub.add_argument("--iters", type=int, default=None, help="MPDATA iterations (1 = upwind)")
        sub.add_argument("--no-fct", action="store_true", help="disable non-oscillatory limiting")
        sub.add_argument("--no-iga", action="store_true", help="disable the infinite-gauge variant")
        sub.add_argument("--no-tot", action="store_true", help="disable third-order terms")

    add_common(commands.add_parser("price-european", help="price a European instrument"))
    add_common(commands.add_parser("price-american", help="price an American put"))
    convergence = commands.add_parser("convergence", help="convergence sweep over C or lambda^2")
    add_common(convergence)
    convergence.add_argument("--axis", choices=["space", "time"], required=True)
    table = commands.add_parser("table-american", help="American-put table against BS93")
    add_common(table, needs_config=False)
    table.add_argument("--courants", type=str, default=",".join(f"{c:g}" for c in TABLE_COURANTS))
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=Config.LOG_LEVEL, format="%(asctime)s - %(levelname)s - %(message)s")
    args = build_parser().parse_args(argv)
    try:
        Config.validate()
    except RuntimeError as exc:
        logger.error(f"configuration error: {exc}")
        return ConfigurationError.exit_code
    Config.print_config(file=sys.stderr)
    try:
        config = load_run_config(args.config) if args.config else None
        options = _options(config, args)
        if args.command == "price-european":
            return cmd_price_european(config, args.out, options)
        if args.command == "price-american":
            return cmd_price_american(config, args.out, options)
        if args.command == "convergence":
            return cmd_convergence(config, args.axis, args.out, options)
        try:
            courants = [float(c) for c in args.courants.split(",") if c.strip()]
        except ValueError:
            raise ConfigurationError(f"invalid --courants list: {args.courants!r}")
        if not courants:
            raise ConfigurationError("--courants must list at least one value")
        return cmd_table_american(courants, args.out, options)
    except PricingError as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
