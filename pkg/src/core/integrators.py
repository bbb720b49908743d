import abc
import logging
from typing import ClassVar

import numpy as np
from numpy.typing import NDArray
from scipy import fft

from core.dto import GridSpec, SpectralField
from core.enums import IntegratorScheme
from core.exceptions import BlowUpError, CflViolationError, ValidationFailure
from core.spectral import dealias_mask, ensure_same_grid, gradient, riesz_velocity, symbol

logger = logging.getLogger(__name__)

CFL_NUMBER = 0.5

Coefficients = NDArray[np.complex128]


def _physical(coeffs: Coefficients, grid: GridSpec) -> NDArray[np.float64]:
    return np.asarray(fft.ifftn(coeffs * grid.size).real)


def _non_mean_energy(coeffs: Coefficients) -> float:
    return float(np.sum(np.abs(coeffs) ** 2) - abs(coeffs.flat[0]) ** 2)


def _rescale_energy(coeffs: Coefficients, target: float) -> Coefficients:
    """Scale the non-mean modes so that their energy does not exceed target."""
    current = _non_mean_energy(coeffs)
    if current <= target or current == 0:
        return coeffs
    mean = coeffs.flat[0]
    scaled = coeffs * np.sqrt(target / current)
    scaled.flat[0] = mean
    return scaled


class Integrator(abc.ABC):
    """
    Abstract base class for time integrators of d/dt theta + s u.grad(theta) + Lambda^alpha theta = 0.

    Dissipation always goes through the exact integrating factor; subclasses decide how the
    advective part is advanced in `_advance`. The nonlinear product is formed from the
    dealiased field, the result is dealiased again and has zero mean. With project_energy the
    non-mean energy after the advective update is clipped to the incoming one; the default is
    the plain scheme.
    """

    scheme: ClassVar[IntegratorScheme]

    def __init__(self, grid: GridSpec, flow_scale: float = 1.0, project_energy: bool = False) -> None:
        if not 0 <= flow_scale <= 1:
            raise ValidationFailure(f"flow_scale must be in [0, 1], got {flow_scale}")
        if flow_scale > 0 and grid.n != 2:
            raise ValidationFailure(f"the advective flow needs n = 2, got n = {grid.n}")
        self._grid = grid
        self._flow_scale = flow_scale
        self._project_energy = project_energy
        self._decay_rate = symbol(grid) ** grid.alpha

    @property
    def is_linear(self) -> bool:
        return self._flow_scale == 0

    def damping(self, dt: float) -> NDArray[np.float64]:
        return np.asarray(np.exp(-self._decay_rate * dt))

    def advection(self, coeffs: Coefficients) -> tuple[Coefficients, float]:
        """Spectral coefficients of s u.grad(theta) and max |u| of the dealiased field."""
        if self.is_linear:
            return np.zeros_like(coeffs), 0.0
        grid = self._grid
        theta = SpectralField(grid=grid, coeffs=np.where(dealias_mask(grid), coeffs, 0.0))
        velocity = [_physical(u.coeffs, grid) for u in riesz_velocity(theta)]
        slopes = [_physical(g.coeffs, grid) for g in gradient(theta)]
        product = sum(u * g for u, g in zip(velocity, slopes, strict=True))
        transport = np.where(dealias_mask(grid), fft.fftn(product) / grid.size, 0.0)
        transport.flat[0] = 0.0
        speed = max(float(np.max(np.abs(u))) for u in velocity)
        return self._flow_scale * transport, speed

    def cfl_bound(self, speed: float) -> float:
        if self.is_linear or speed == 0:
            return float("inf")
        return CFL_NUMBER * self._grid.dx / (self._flow_scale * speed)

    def step(self, state: SpectralField, dt: float, t: float | None = None) -> SpectralField:
        ensure_same_grid(self._grid, state.grid)
        if not dt > 0:
            raise ValidationFailure(f"dt must be positive, got {dt}")
        coeffs = np.array(state.coeffs)
        transport, speed = self.advection(coeffs)
        bound = self.cfl_bound(speed)
        if dt > bound:
            raise CflViolationError(dt=dt, bound=bound, t=t)
        advanced = self._advance(coeffs, transport, dt)
        if self._project_energy and not self.is_linear:
            advanced = _rescale_energy(advanced, _non_mean_energy(coeffs))
        if not np.all(np.isfinite(advanced)):
            raise BlowUpError(t=t)
        return SpectralField(grid=self._grid, coeffs=advanced)

    @abc.abstractmethod
    def _advance(self, coeffs: Coefficients, transport: Coefficients, dt: float) -> Coefficients:
        raise NotImplementedError


class ImexEuler(Integrator):
    """
    Explicit Euler for advection, then exact dissipation.

    The dealiased transport is orthogonal to the state, so one step changes the energy by
    dt^2 |N|^2 before damping. Below the CFL bound the damping removes more than that.
    """

    scheme = IntegratorScheme.IMEX_EULER

    def _advance(self, coeffs: Coefficients, transport: Coefficients, dt: float) -> Coefficients:
        if self.is_linear:
            return coeffs * self.damping(dt)
        return (coeffs - dt * transport) * self.damping(dt)


class ImexHeun(Integrator):
    """Second-order integrating-factor Runge-Kutta."""

    scheme = IntegratorScheme.IMEX_HEUN

    def _advance(self, coeffs: Coefficients, transport: Coefficients, dt: float) -> Coefficients:
        damping = self.damping(dt)
        if self.is_linear:
            return coeffs * damping
        predictor = (coeffs - dt * transport) * damping
        corrector, _ = self.advection(predictor)
        return damping * (coeffs - 0.5 * dt * transport) - 0.5 * dt * corrector


INTEGRATORS: dict[IntegratorScheme, type[Integrator]] = {cls.scheme: cls for cls in (ImexEuler, ImexHeun)}


def make_integrator(
    grid: GridSpec, flow_scale: float, scheme: IntegratorScheme, project_energy: bool = False
) -> Integrator:
    return INTEGRATORS[IntegratorScheme(scheme)](grid, flow_scale, project_energy)
