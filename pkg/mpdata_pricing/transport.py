"""Backward-in-time integration of the homogeneous advection-diffusion equation.

The Fickian term is folded into the advective velocity, so every step is a
plain MPDATA step with a solution-dependent Courant field.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Optional

import numpy as np

from mpdata_pricing.errors import ConfigurationError, NumericalError, StabilityError
from mpdata_pricing.mpdata import (
    FaceField,
    MpdataOptions,
    ScalarField,
    field_epsilon,
    mpdata_step,
    ratio_gradient,
)

logger = logging.getLogger(__name__)

BACKWARD = -1.0
FORWARD = 1.0

DIVERGENT_FLOW_BOUND = 0.5
CONSTANT_VELOCITY_BOUND = 1.0
STABILITY_SLACK = 1e-12

StepHook = Callable[[int, float, ScalarField], ScalarField]


class BoundaryKind(str, Enum):
    OPEN = "open"
    LOG_LINEAR = "log-linear"
    PERIODIC = "periodic"


@dataclass(frozen=True)
class GridSpec:
    x_min: float
    delta_x: float
    n_x: int
    delta_t: float
    n_t: int

    def __post_init__(self):
        if not self.delta_x > 0:
            raise ConfigurationError(f"delta_x must be positive, got {self.delta_x}")
        if not self.delta_t > 0:
            raise ConfigurationError(f"delta_t must be positive, got {self.delta_t}")
        if self.n_x < 1:
            raise ConfigurationError(f"n_x must be at least 1, got {self.n_x}")
        if self.n_t < 0:
            raise ConfigurationError(f"n_t must be nonnegative, got {self.n_t}")

    @property
    def x_max(self) -> float:
        return self.x_min + self.n_x * self.delta_x

    @property
    def tenure(self) -> float:
        return self.n_t * self.delta_t

    def cell_centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n_x) + 0.5) * self.delta_x


@dataclass(frozen=True)
class TransportProblem:
    u: float
    nu: float
    grid: GridSpec
    boundary: BoundaryKind = BoundaryKind.OPEN

    def __post_init__(self):
        try:
            object.__setattr__(self, "boundary", BoundaryKind(self.boundary))
        except ValueError:
            raise ConfigurationError(f"unsupported boundary kind: {self.boundary!r}")
        if self.grid.n_x < 4:
            raise ConfigurationError(f"transport needs at least 4 cells, got {self.grid.n_x}")
        if not (math.isfinite(self.u) and math.isfinite(self.nu)):
            raise ConfigurationError("u and nu must be finite")

    @property
    def sigma(self) -> float:
        return math.sqrt(max(-2.0 * self.nu, 0.0))


@dataclass(frozen=True)
class StabilityReport:
    max_effective_courant: float
    lambda_squared: float
    satisfied: bool
    bound: float = DIVERGENT_FLOW_BOUND

    def summary(self) -> str:
        state = "satisfied" if self.satisfied else "VIOLATED"
        return (f"max |C| = {self.max_effective_courant:.6g} (bound {self.bound}), "
                f"lambda^2 = {self.lambda_squared:.6g}: {state}")


def effective_courant(field: ScalarField, problem: TransportProblem,
                      direction: float = BACKWARD, epsilon_scale: Optional[float] = None) -> FaceField:
    grid = problem.grid
    psi = field.values
    eps = field_epsilon(psi) if epsilon_scale is None else field_epsilon(psi, epsilon_scale)
    velocity = problem.u - problem.nu * (2.0 / grid.delta_x) * ratio_gradient(psi, eps)
    courant = velocity * direction * grid.delta_t / grid.delta_x
    if not np.all(np.isfinite(courant)):
        raise NumericalError("non-finite effective Courant number")
    return FaceField(courant)


def check_stability(problem: TransportProblem, sigma: float) -> StabilityReport:
    if sigma < 0:
        raise ConfigurationError(f"sigma must be nonnegative, got {sigma}")
    grid = problem.grid
    advective = abs(problem.u) * grid.delta_t / grid.delta_x
    if sigma == 0:
        lambda_squared = math.inf
        fickian = 0.0
    else:
        lambda_squared = grid.delta_x ** 2 / (sigma ** 2 * grid.delta_t)
        fickian = 1.0 / lambda_squared
    # a negligible Fickian term leaves a constant-velocity advection check
    bound = DIVERGENT_FLOW_BOUND if fickian > STABILITY_SLACK else CONSTANT_VELOCITY_BOUND
    worst = max(advective, fickian)
    return StabilityReport(
        max_effective_courant=worst,
        lambda_squared=lambda_squared,
        satisfied=worst <= bound + STABILITY_SLACK,
        bound=bound,
    )


def fill_halo(field: ScalarField, boundary: BoundaryKind,
              on_fallback: Optional[Callable[[str], None]] = None) -> ScalarField:
    boundary = BoundaryKind(boundary)
    h, n = field.halo, field.n_x
    values = field.values.copy()
    first, last = h, h + n - 1
    offsets = np.arange(1, h + 1)

    if boundary is BoundaryKind.PERIODIC:
        if n < h:
            raise ConfigurationError(f"periodic halo {h} wider than {n} interior cells")
        values[:h] = values[last - h + 1:last + 1]
        values[last + 1:] = values[first:first + h]
        return ScalarField(values, h)

    values[:h] = values[first]
    values[last + 1:] = values[last]
    if boundary is BoundaryKind.OPEN:
        return ScalarField(values, h)

    # ln(psi) continues linearly: constant ratio between neighbouring cells
    for side, edge, inner, sign in (("left", first, first + 1, -1), ("right", last, last - 1, 1)):
        a, b = values[edge], values[inner]
        if a <= 0 or b <= 0:
            if on_fallback is not None:
                on_fallback(side)
            else:
                logger.debug(f"log-linear extrapolation unavailable on the {side} edge, using open")
            continue
        values[edge + sign * offsets] = a * (a / b) ** offsets
    return ScalarField(values, h)


class TransportSolver:
    """Steps a TransportProblem with MPDATA, refreshing the halo between passes."""

    def __init__(self, problem: TransportProblem, options: Optional[MpdataOptions] = None, *,
                 allow_unstable: bool = False, direction: float = BACKWARD):
        self.problem = problem
        self.options = options or MpdataOptions()
        if allow_unstable:
            self.options = replace(self.options, max_courant=math.inf)
        self.allow_unstable = allow_unstable
        self.direction = direction
        self.fallbacks = {"left": 0, "right": 0}

    def _record_fallback(self, side: str) -> None:
        if self.fallbacks[side] == 0:
            logger.warning(f"log-linear boundary fell back to open on the {side} edge")
        self.fallbacks[side] += 1

    def fill(self, field: ScalarField) -> ScalarField:
        return fill_halo(field, self.problem.boundary, on_fallback=self._record_fallback)

    def stability(self) -> StabilityReport:
        return check_stability(self.problem, self.problem.sigma)

    def step(self, field: ScalarField) -> ScalarField:
        field = self.fill(field)
        courant = effective_courant(field, self.problem, self.direction, self.options.epsilon)
        result = mpdata_step(field, courant, self.options, fill=self.fill,
                             periodic=self.problem.boundary is BoundaryKind.PERIODIC)
        if not np.all(np.isfinite(result.interior)):
            raise NumericalError("solver produced non-finite values")
        return result

    def run(self, terminal: ScalarField, hook: Optional[StepHook] = None) -> ScalarField:
        grid = self.problem.grid
        if grid.n_t == 0:
            return terminal
        if terminal.n_x != grid.n_x:
            raise NumericalError(f"terminal field has {terminal.n_x} cells, grid has {grid.n_x}")

        report = self.stability()
        if not report.satisfied:
            if not self.allow_unstable:
                raise StabilityError(report.summary())
            logger.warning(f"running an unstable configuration: {report.summary()}")

        field = terminal
        for n in range(grid.n_t):
            field = self.step(field)
            if hook is not None:
                t_next = (grid.n_t - n - 1) * grid.delta_t
                field = hook(n, t_next, field)
        logger.debug(f"integrated {grid.n_t} steps on {grid.n_x} cells")
        return self.fill(field)


def integrate_backward(problem: TransportProblem, terminal: ScalarField,
                       options: Optional[MpdataOptions] = None, hook: Optional[StepHook] = None, *,
                       allow_unstable: bool = False) -> ScalarField:
    return TransportSolver(problem, options, allow_unstable=allow_unstable).run(terminal, hook)


def integrate_forward(problem: TransportProblem, initial: ScalarField,
                      options: Optional[MpdataOptions] = None, *, allow_unstable: bool = False) -> ScalarField:
    solver = TransportSolver(problem, options, allow_unstable=allow_unstable, direction=FORWARD)
    return solver.run(initial)
