"""One-dimensional MPDATA: upwind pass plus antidiffusive corrective passes.

Layout of the arrays used throughout:

  values  | h0 | h1 | c0 | c1 | ... | c(n-1) | h | h |      (halo = 2)
  faces        f0   f1   f2  ...                           (len(values) - 1)

Face j sits between values[j] and values[j + 1], so interior cell i (an index
into values) is bounded by faces i - 1 and i.

Options:
  non_oscillatory  - flux-corrected-transport limiting of corrective fluxes
  infinite_gauge   - corrective passes transport the constant gauge 1 and
                     A = (psi[i+1] - psi[i]) / 2
  third_order      - third-order-terms correction of the antidiffusive velocity
  divergent_flow   - divergent-flow correction of the antidiffusive velocity
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from mpdata_pricing.config import Config
from mpdata_pricing.errors import ConfigurationError, GridMismatchError, StabilityError

logger = logging.getLogger(__name__)

HALO = 2


@dataclass(frozen=True)
class ScalarField:
    """Cell-centred values of psi padded with `halo` cells on each side."""

    values: np.ndarray
    halo: int = HALO

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise GridMismatchError("ScalarField values must be one-dimensional")
        if self.halo < 1:
            raise GridMismatchError(f"halo must be at least 1, got {self.halo}")
        if values.size <= 2 * self.halo:
            raise GridMismatchError(
                f"{values.size} values leave no interior cells with halo {self.halo}"
            )
        object.__setattr__(self, "values", values)

    @classmethod
    def from_interior(cls, interior, halo: int = HALO) -> "ScalarField":
        interior = np.asarray(interior, dtype=float)
        values = np.zeros(interior.size + 2 * halo)
        values[halo:halo + interior.size] = interior
        return cls(values, halo)

    @property
    def n_x(self) -> int:
        return self.values.size - 2 * self.halo

    @property
    def interior(self) -> np.ndarray:
        return self.values[self.halo:self.halo + self.n_x]

    def with_interior(self, interior) -> "ScalarField":
        values = self.values.copy()
        values[self.halo:self.halo + self.n_x] = interior
        return ScalarField(values, self.halo)


@dataclass(frozen=True)
class FaceField:
    """Courant numbers at cell faces (see module docstring for indexing)."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise GridMismatchError("FaceField values must be one-dimensional")
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, courant: float, field: ScalarField) -> "FaceField":
        return cls(np.full(field.values.size - 1, float(courant)))


@dataclass(frozen=True)
class MpdataOptions:
    n_iterations: int = 2
    non_oscillatory: bool = True
    infinite_gauge: bool = True
    third_order: bool = True
    divergent_flow: bool = False
    epsilon: float = Config.EPSILON_SCALE
    max_courant: float = 1.0

    def __post_init__(self):
        if int(self.n_iterations) != self.n_iterations or self.n_iterations < 1:
            raise ConfigurationError(f"n_iterations must be an integer >= 1, got {self.n_iterations}")
        if not 0 < self.epsilon < 1e-6:
            raise ConfigurationError(f"epsilon must lie in (0, 1e-6), got {self.epsilon}")
        if not self.max_courant > 0:
            raise ConfigurationError(f"max_courant must be positive, got {self.max_courant}")

    @classmethod
    def upwind(cls) -> "MpdataOptions":
        return cls(n_iterations=1, non_oscillatory=False, infinite_gauge=False, third_order=False)

    @classmethod
    def basic(cls, n_iterations: int = 2) -> "MpdataOptions":
        return cls(n_iterations=n_iterations, non_oscillatory=False, infinite_gauge=False, third_order=False)

    @property
    def required_halo(self) -> int:
        return 2 if (self.third_order or self.non_oscillatory) else 1

    @property
    def scheme(self) -> str:
        return "upwind" if self.n_iterations == 1 else "mpdata"

    def with_iterations(self, n_iterations: int) -> "MpdataOptions":
        return replace(self, n_iterations=n_iterations)

    def as_dict(self) -> dict:
        return {
            "n_iterations": self.n_iterations,
            "non_oscillatory": self.non_oscillatory,
            "infinite_gauge": self.infinite_gauge,
            "third_order": self.third_order,
            "divergent_flow": self.divergent_flow,
        }


def field_epsilon(values: np.ndarray, scale: float = Config.EPSILON_SCALE) -> float:
    """Denominator guard scaled to the field magnitude."""
    return scale * max(1.0, float(np.max(np.abs(values))))


def ratio_gradient(values: np.ndarray, epsilon: float) -> np.ndarray:
    """A at every face: (psi[j+1] - psi[j]) / (psi[j+1] + psi[j] + epsilon)."""
    left, right = values[:-1], values[1:]
    return (right - left) / (right + left + epsilon)


def wrap_cells(values: np.ndarray, halo: int) -> np.ndarray:
    """Periodic images for any halo-padded per-cell array."""
    n = values.size - 2 * halo
    wrapped = values.copy()
    wrapped[:halo] = values[n:n + halo]
    wrapped[halo + n:] = values[halo:2 * halo]
    return wrapped


def wrap_faces(values: np.ndarray, halo: int) -> np.ndarray:
    """Periodic images for a face array; faces halo - 1 .. halo + n - 2 are the originals."""
    n = values.size + 1 - 2 * halo
    wrapped = values.copy()
    wrapped[:halo - 1] = values[n:n + halo - 1]
    wrapped[halo + n - 1:] = values[halo - 1:2 * halo - 1]
    return wrapped


def upwind_flux(psi_left, psi_right, courant):
    return np.maximum(courant, 0) * psi_left + np.minimum(courant, 0) * psi_right


def _check_lengths(field: ScalarField, courant: FaceField) -> None:
    if courant.values.size != field.values.size - 1:
        raise GridMismatchError(
            f"{courant.values.size} faces do not match {field.values.size} cells "
            f"(expected {field.values.size - 1})"
        )


def _apply_fluxes(field: ScalarField, fluxes: np.ndarray) -> ScalarField:
    h, n = field.halo, field.n_x
    values = field.values.copy()
    values[h:h + n] -= fluxes[h:h + n] - fluxes[h - 1:h + n - 1]
    return ScalarField(values, h)


def upwind_step(field: ScalarField, courant: FaceField) -> ScalarField:
    _check_lengths(field, courant)
    psi = field.values
    return _apply_fluxes(field, upwind_flux(psi[:-1], psi[1:], courant.values))


def antidiffusive_courant(field: ScalarField, courant: FaceField, options: MpdataOptions) -> FaceField:
    """Pseudo-velocity reversing the truncation error of the previous pass."""
    _check_lengths(field, courant)
    psi = field.values
    c = courant.values
    eps = field_epsilon(psi, options.epsilon)

    if options.infinite_gauge:
        a = (psi[1:] - psi[:-1]) / 2
    else:
        a = ratio_gradient(psi, eps)
    result = (np.abs(c) - c * c) * a

    # four-point stencils only exist away from the array ends
    if options.third_order:
        inner = c[1:-1]
        coefficient = (3 * inner * np.abs(inner) - 2 * inner ** 3 - inner) / 6
        curvature = psi[3:] - psi[2:-1] - psi[1:-2] + psi[:-3]
        if options.infinite_gauge:
            ratio = curvature / 2
        else:
            ratio = 2 * curvature / (psi[3:] + psi[2:-1] + psi[1:-2] + psi[:-3] + eps)
        result[1:-1] += coefficient * ratio

    if options.divergent_flow:
        inner = c[1:-1]
        if options.infinite_gauge:
            weight = 1.0
        else:
            total = psi[2:-1] + psi[1:-2]
            weight = total / (total + eps)
        result[1:-1] += -0.25 * inner * (c[2:] - c[:-2]) * weight

    return FaceField(result)


def _corrective_fluxes(field: ScalarField, antidiff: np.ndarray, infinite_gauge: bool) -> np.ndarray:
    if infinite_gauge:
        return antidiff
    psi = field.values
    return upwind_flux(psi[:-1], psi[1:], antidiff)


def fct_factors(raw_antidiff: FaceField, field_before: ScalarField, field_after_upwind: ScalarField,
                options: Optional[MpdataOptions] = None) -> tuple[np.ndarray, np.ndarray]:
    """Per-cell (beta_up, beta_down) limiter factors, clipped to [0, 1].

    Cells at the array ends have no neighbours on one side and get factor 0;
    the faces next to them are never used to update interior cells.
    """
    options = options or MpdataOptions()
    psi = field_after_upwind.values
    if field_before.values.size != psi.size:
        raise GridMismatchError("fields passed to the limiter differ in length")
    _check_lengths(field_after_upwind, raw_antidiff)
    eps = field_epsilon(psi, options.epsilon)

    hi = np.maximum(field_before.values, psi)
    lo = np.minimum(field_before.values, psi)
    psi_max = np.maximum(np.maximum(hi[:-2], hi[1:-1]), hi[2:])
    psi_min = np.minimum(np.minimum(lo[:-2], lo[1:-1]), lo[2:])

    flux = _corrective_fluxes(field_after_upwind, raw_antidiff.values, options.infinite_gauge)
    incoming = np.maximum(flux[:-1], 0) - np.minimum(flux[1:], 0)
    outgoing = np.maximum(flux[1:], 0) - np.minimum(flux[:-1], 0)

    beta_up = np.zeros_like(psi)
    beta_down = np.zeros_like(psi)
    beta_up[1:-1] = (psi_max - psi[1:-1]) / (incoming + eps)
    beta_down[1:-1] = (psi[1:-1] - psi_min) / (outgoing + eps)
    return np.clip(beta_up, 0, 1), np.clip(beta_down, 0, 1)


def fct_limit(raw_antidiff: FaceField, field_before: ScalarField, field_after_upwind: ScalarField,
              options: Optional[MpdataOptions] = None, *, periodic: bool = False) -> FaceField:
    """Zalesak-style two-sided limiting of the corrective Courant numbers.

    The subsequent corrective pass cannot push a cell outside the min/max of
    its neighbourhood in either the pre-step or the post-upwind field. With
    `periodic`, halo factors are copied from their interior images.
    """
    beta_up, beta_down = fct_factors(raw_antidiff, field_before, field_after_upwind, options)
    if periodic:
        beta_up = wrap_cells(beta_up, field_after_upwind.halo)
        beta_down = wrap_cells(beta_down, field_after_upwind.halo)
    c = raw_antidiff.values
    outward = np.minimum(beta_down[:-1], beta_up[1:])
    inward = np.minimum(beta_up[:-1], beta_down[1:])
    return FaceField(c * np.where(c >= 0, outward, inward))


def mpdata_step(field: ScalarField, courant: FaceField, options: MpdataOptions,
                fill: Optional[Callable[[ScalarField], ScalarField]] = None, *,
                periodic: bool = False) -> ScalarField:
    """Upwind pass followed by n_iterations - 1 corrective passes.

    `fill` refreshes the halo between passes; the halo of `field` itself must
    already be filled. `periodic` also wraps the antidiffusive Courant numbers
    and limiter factors, whose end values lack the full stencil.
    """
    _check_lengths(field, courant)
    if field.halo < options.required_halo:
        raise GridMismatchError(
            f"halo {field.halo} too narrow for the selected options (need {options.required_halo})"
        )

    h, n = field.halo, field.n_x
    worst = float(np.max(np.abs(courant.values[h - 1:h + n])))
    if not worst <= options.max_courant:
        raise StabilityError(f"|C| = {worst:.4g} exceeds the bound {options.max_courant}")

    result = upwind_step(field, courant)
    if options.n_iterations == 1:
        return result

    fill = fill or (lambda f: f)
    previous = courant
    for iteration in range(1, options.n_iterations):
        result = fill(result)
        antidiff = antidiffusive_courant(result, previous, options)
        if periodic:
            antidiff = FaceField(wrap_faces(antidiff.values, h))
        if options.non_oscillatory:
            antidiff = fct_limit(antidiff, field, result, options, periodic=periodic)
        result = _apply_fluxes(result, _corrective_fluxes(result, antidiff.values, options.infinite_gauge))
        previous = antidiff
        logger.debug(f"corrective pass {iteration}: max |C'| = {np.max(np.abs(antidiff.values)):.3g}")
    return result
