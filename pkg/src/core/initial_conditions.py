import abc
import logging
from collections.abc import Mapping
from typing import ClassVar

import numpy as np
from numpy.typing import NDArray
from scipy import fft

from core.dto import GridSpec, InitialConditionSpec, RealField
from core.enums import InitialConditionPreset
from core.exceptions import ValidationFailure
from core.oracles import PeriodicGaussian
from core.spectral import coordinates, symbol

logger = logging.getLogger(__name__)


class InitialCondition(abc.ABC):
    """
    Abstract base class for initial-condition presets.

    Subclasses declare their parameters with defaults in `defaults` and implement `_generate`.
    Unknown parameters are rejected so that a typo in a run config never passes silently.
    """

    preset: ClassVar[InitialConditionPreset]
    defaults: ClassVar[Mapping[str, float]] = {}

    def __init__(self, grid: GridSpec, params: Mapping[str, float] | None = None, seed: int = 0) -> None:
        params = dict(params or {})
        unknown = set(params) - set(self.defaults)
        if unknown:
            raise ValidationFailure(f"unknown parameters for {self.preset.value}: {sorted(unknown)}")
        self._grid = grid
        self._params = {**self.defaults, **params}
        self._seed = seed

    def param(self, name: str) -> float:
        return float(self._params[name])

    @abc.abstractmethod
    def _generate(self, rng: np.random.Generator) -> NDArray[np.float64]:
        raise NotImplementedError

    def build(self) -> RealField:
        samples = self._generate(np.random.default_rng(self._seed))
        logger.debug(f"initial condition {self.preset.value} params={self._params} seed={self._seed}")
        return RealField(grid=self._grid, samples=samples)


class RandomBandLimited(InitialCondition):
    """Band-limited white noise with k_min <= |k| <= k_max, mean zero, scaled to the given RMS amplitude."""

    preset = InitialConditionPreset.RANDOM_HK
    defaults = {"k_min": 1.0, "k_max": 8.0, "amplitude": 1.0}

    def _generate(self, rng: np.random.Generator) -> NDArray[np.float64]:
        k_min, k_max = self.param("k_min"), self.param("k_max")
        if not 0 < k_min <= k_max < self._grid.N / 2:
            raise ValidationFailure(f"need 0 < k_min <= k_max < N/2, got ({k_min}, {k_max})")
        noise = fft.fftn(rng.standard_normal(self._grid.shape))
        integer_k = symbol(self._grid) * self._grid.L / (2 * np.pi)
        band = (integer_k >= k_min - 1e-9) & (integer_k <= k_max + 1e-9)
        samples = fft.ifftn(np.where(band, noise, 0.0)).real
        samples -= samples.mean()
        rms = float(np.sqrt(np.mean(samples**2)))
        if rms == 0:
            raise ValidationFailure("band contains no modes")
        return samples * (self.param("amplitude") / rms)


class GaussianVortices(InitialCondition):
    """Signed periodized Gaussians at random centres, alternating sign, mean removed."""

    preset = InitialConditionPreset.GAUSSIAN_VORTICES
    defaults = {"count": 4.0, "sigma": 0.5, "amplitude": 1.0}

    def _generate(self, rng: np.random.Generator) -> NDArray[np.float64]:
        count = int(self.param("count"))
        if count < 1:
            raise ValidationFailure(f"count must be at least 1, got {count}")
        samples = np.zeros(self._grid.shape)
        for index in range(count):
            center = tuple(float(c) for c in rng.uniform(0.0, self._grid.L, size=self._grid.n))
            vortex = PeriodicGaussian(grid=self._grid, sigma=self.param("sigma"), center=center)
            samples += (-1) ** index * vortex.heat()
        samples -= samples.mean()
        peak = float(np.max(np.abs(samples)))
        return samples * (self.param("amplitude") / peak) if peak > 0 else samples


class Shear(InitialCondition):
    preset = InitialConditionPreset.SHEAR
    defaults = {"mode": 1.0, "amplitude": 1.0}

    def _generate(self, rng: np.random.Generator) -> NDArray[np.float64]:
        x1 = coordinates(self._grid)[0]
        return self.param("amplitude") * np.cos(2 * np.pi * self.param("mode") * x1 / self._grid.L)


class RoughSigns(InitialCondition):
    """Piecewise constant +-amplitude on cells^n blocks: bounded, discontinuous data."""

    preset = InitialConditionPreset.ROUGH
    defaults = {"cells": 8.0, "amplitude": 1.0}

    def _generate(self, rng: np.random.Generator) -> NDArray[np.float64]:
        cells = int(self.param("cells"))
        if cells < 1 or self._grid.N % cells:
            raise ValidationFailure(f"cells must divide N={self._grid.N}, got {cells}")
        signs = rng.choice([-1.0, 1.0], size=(cells,) * self._grid.n)
        block = self._grid.N // cells
        samples = signs
        for axis in range(self._grid.n):
            samples = np.repeat(samples, block, axis=axis)
        return self.param("amplitude") * samples


class PowerProfile(InitialCondition):
    """amplitude * |x1|^gamma with x1 measured as the periodic distance to the origin."""

    preset = InitialConditionPreset.PROFILE
    defaults = {"gamma": 0.5, "amplitude": 1.0}

    def _generate(self, rng: np.random.Generator) -> NDArray[np.float64]:
        gamma = self.param("gamma")
        if not gamma > 0:
            raise ValidationFailure(f"gamma must be positive, got {gamma}")
        x1 = coordinates(self._grid)[0]
        wrapped = np.where(x1 < self._grid.L / 2, x1, self._grid.L - x1)
        return self.param("amplitude") * wrapped**gamma


PRESETS: dict[InitialConditionPreset, type[InitialCondition]] = {
    cls.preset: cls for cls in (RandomBandLimited, GaussianVortices, Shear, RoughSigns, PowerProfile)
}


def make_initial_condition(spec: InitialConditionSpec, grid: GridSpec, seed: int = 0) -> RealField:
    return PRESETS[InitialConditionPreset(spec.name)](grid, spec.params, seed).build()
