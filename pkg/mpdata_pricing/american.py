"""American put as a linear complementarity problem.

After every MPDATA step the solution is projected onto the discounted
exercise value at the step's destination time:

    R = (max(psi*, floor) - psi*) / dt,    psi(n+1) = psi* + dt * R

With r <= 0 the floor never binds and the constraint is left inactive.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field as dataclass_field
from typing import Optional

import numpy as np

from mpdata_pricing.errors import ConfigurationError, GridMismatchError
from mpdata_pricing.finmodel import (
    InstrumentSpec,
    MarketParams,
    PricingResult,
    Resolution,
    extract_price,
    spot_index,
    terminal_condition,
)
from mpdata_pricing.mpdata import MpdataOptions, ScalarField
from mpdata_pricing.transport import (
    BoundaryKind,
    TransportProblem,
    TransportSolver,
    check_stability,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExerciseConstraint:
    strike: float
    rate: float
    centers: np.ndarray
    halo: int

    def discounted_intrinsic(self, t: float) -> ScalarField:
        floor = math.exp(-self.rate * t) * np.maximum(self.strike - np.exp(self.centers), 0.0)
        return ScalarField.from_interior(floor, self.halo)


def _check_constraint(psi_star: ScalarField, floor: ScalarField, delta_t: float) -> None:
    if psi_star.values.size != floor.values.size:
        raise GridMismatchError(
            f"constraint has {floor.values.size} cells, solution has {psi_star.values.size}"
        )
    if not delta_t > 0:
        raise ConfigurationError(f"delta_t must be positive, got {delta_t}")


def exercise_source(psi_star: ScalarField, floor: ScalarField, delta_t: float) -> np.ndarray:
    """Source term R on the interior cells."""
    _check_constraint(psi_star, floor, delta_t)
    return (np.maximum(psi_star.interior, floor.interior) - psi_star.interior) / delta_t


def lcp_step(psi_star: ScalarField, constraint_at_next: ScalarField, delta_t: float) -> ScalarField:
    """psi* + dt * R, taken as the cellwise max of psi* and the floor."""
    _check_constraint(psi_star, constraint_at_next, delta_t)
    return psi_star.with_interior(np.maximum(psi_star.interior, constraint_at_next.interior))


@dataclass
class ExerciseHook:
    """Per-step LCP projection that also keeps branch bookkeeping."""

    constraint: ExerciseConstraint
    delta_t: float
    exercised: list = dataclass_field(default_factory=list)
    floor_violations: int = 0

    def __call__(self, step: int, t_next: float, psi_star: ScalarField) -> ScalarField:
        floor = self.constraint.discounted_intrinsic(t_next)
        self.exercised.append(exercise_source(psi_star, floor, self.delta_t) > 0)
        result = lcp_step(psi_star, floor, self.delta_t)
        self.floor_violations += int(np.count_nonzero(result.interior < floor.interior))
        return result

    def exercise_counts(self) -> np.ndarray:
        return np.array([mask.sum() for mask in self.exercised], dtype=int)


def price_american(instrument: InstrumentSpec, params: MarketParams, resolution: Resolution,
                   options: Optional[MpdataOptions] = None, *, spot: float,
                   allow_unstable: bool = False, with_european: bool = False) -> PricingResult:
    if not instrument.is_american:
        raise ConfigurationError(f"price_american needs an american_put, got {instrument.kind.value}")
    options = options or MpdataOptions()
    grid = resolution.grid()
    if spot_index(grid, spot) is None:
        raise ConfigurationError(f"grid is not aligned to ln(S0) for S0={spot}; size it with anchor=S0")
    problem = TransportProblem(params.u, params.nu, grid, BoundaryKind.LOG_LINEAR)
    terminal = terminal_condition(instrument, params, grid)
    constraint = ExerciseConstraint(instrument.strike, params.r, grid.cell_centers(), terminal.halo)
    hook = ExerciseHook(constraint, grid.delta_t)
    early_exercise = params.r > 0
    if not early_exercise:
        # a put is never exercised early without a positive rate
        logger.info(f"r = {params.r}: exercise constraint inactive, the price is the European one")

    solver = TransportSolver(problem, options, allow_unstable=allow_unstable)
    solution = solver.run(terminal, hook if early_exercise else None)
    price = extract_price(solution, grid, spot)
    if hook.floor_violations:
        logger.warning(f"{hook.floor_violations} cells ended below the exercise floor")

    metadata = {
        "options": options.as_dict(),
        "boundary": BoundaryKind.LOG_LINEAR.value,
        "boundary_fallbacks": dict(solver.fallbacks),
        "early_exercise": early_exercise,
        "exercise_counts": hook.exercise_counts(),
    }
    if with_european:
        european = TransportSolver(problem, options, allow_unstable=allow_unstable).run(terminal)
        metadata["european_price"] = extract_price(european, grid, spot)

    logger.info(f"american put T={instrument.tenure} S0={spot} priced at {price:.6g} ({resolution.summary()})")
    return PricingResult(
        price=price,
        instrument=instrument,
        params=params,
        spot=spot,
        field=solution,
        terminal=terminal,
        resolution=resolution,
        stability=check_stability(problem, params.sigma),
        metadata=metadata,
    )
