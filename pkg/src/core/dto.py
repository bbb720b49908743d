import dataclasses
import math
from collections.abc import Mapping, Sequence
from typing import Any

import numpy as np
from numpy.typing import NDArray

from core.enums import InitialConditionPreset, IntegratorScheme
from core.exceptions import FieldMismatchError, ValidationFailure

MAX_DIMENSION = 3
TIME_TOLERANCE = 1e-9


def _frozen_array(values: Any, dtype: type) -> NDArray[Any]:
    array = np.array(values, dtype=dtype)
    array.setflags(write=False)
    return array


@dataclasses.dataclass(frozen=True)
class GridSpec:
    """
    Periodic grid on the n-torus [0, L)^n with N nodes per axis.

    Attributes:
        n: Spatial dimension (1..3)
        N: Nodes per axis (power of two, at least 8)
        L: Period per axis
        alpha: Dissipation order, alpha in (0, 2]
    """

    n: int = 2
    N: int = 128
    L: float = 2 * math.pi
    alpha: float = 1.0

    def __post_init__(self) -> None:
        if not 1 <= self.n <= MAX_DIMENSION:
            raise ValidationFailure(f"n must be between 1 and {MAX_DIMENSION}, got {self.n}")
        if self.N < 8 or self.N & (self.N - 1) != 0:
            raise ValidationFailure(f"N must be a power of two and at least 8, got {self.N}")
        if not self.L > 0:
            raise ValidationFailure(f"L must be positive, got {self.L}")
        if not 0 < self.alpha <= 2:
            raise ValidationFailure(f"alpha must be in (0, 2], got {self.alpha}")

    @property
    def epsilon(self) -> float:
        return 1.0 - self.alpha

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.n

    @property
    def size(self) -> int:
        return self.N**self.n

    @property
    def volume(self) -> float:
        return self.L**self.n

    def with_alpha(self, alpha: float) -> "GridSpec":
        return dataclasses.replace(self, alpha=alpha)


@dataclasses.dataclass(frozen=True, eq=False)
class RealField:
    grid: GridSpec
    samples: NDArray[np.float64]

    def __post_init__(self) -> None:
        samples = _frozen_array(self.samples, np.float64)
        if samples.shape != self.grid.shape:
            raise FieldMismatchError(f"samples shape {samples.shape} does not match grid shape {self.grid.shape}")
        if not np.all(np.isfinite(samples)):
            raise ValidationFailure("samples must be finite")
        object.__setattr__(self, "samples", samples)

    @property
    def mean(self) -> float:
        return float(np.mean(self.samples))


@dataclasses.dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients normalized so that a constant field c has coeffs[0] == c."""

    grid: GridSpec
    coeffs: NDArray[np.complex128]

    def __post_init__(self) -> None:
        coeffs = _frozen_array(self.coeffs, np.complex128)
        if coeffs.shape != self.grid.shape:
            raise FieldMismatchError(f"coeffs shape {coeffs.shape} does not match grid shape {self.grid.shape}")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def mean(self) -> float:
        return float(self.coeffs.flat[0].real)


@dataclasses.dataclass(frozen=True)
class InitialConditionSpec:
    name: InitialConditionPreset
    params: Mapping[str, float] = dataclasses.field(default_factory=dict)


@dataclasses.dataclass(frozen=True)
class SolverConfig:
    """
    Time integration parameters.

    flow_scale multiplies the advection term: 0 gives the linear fractional heat flow,
    r0^(alpha - epsilon) gives the modified equation used for small alpha. energy_projection
    clips the energy of every advective step to the incoming energy.
    """

    grid: GridSpec
    dt: float
    t_end: float
    ic: InitialConditionSpec
    seed: int = 0
    flow_scale: float = 1.0
    scheme: IntegratorScheme = IntegratorScheme.IMEX_EULER
    snapshot_every: int = 1
    energy_projection: bool = False

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValidationFailure(f"dt must be positive, got {self.dt}")
        if not self.t_end >= 0:
            raise ValidationFailure(f"t_end must be non-negative, got {self.t_end}")
        if not 0 <= self.flow_scale <= 1:
            raise ValidationFailure(f"flow_scale must be in [0, 1], got {self.flow_scale}")
        if self.snapshot_every < 1:
            raise ValidationFailure(f"snapshot_every must be at least 1, got {self.snapshot_every}")


@dataclasses.dataclass(frozen=True)
class Snapshot:
    t: float
    field: RealField


@dataclasses.dataclass(frozen=True, slots=True)
class FieldNorms:
    l2: float
    sup: float
    h_alpha_half: float


@dataclasses.dataclass(frozen=True, slots=True)
class NormRecord:
    t: float
    l2: float
    sup: float
    h_alpha_half: float
    dissipation: float


@dataclasses.dataclass(frozen=True)
class Trajectory:
    grid: GridSpec
    snapshots: tuple[Snapshot, ...]
    norms: tuple[NormRecord, ...] = ()

    def __post_init__(self) -> None:
        if not self.snapshots:
            raise ValidationFailure("trajectory needs at least one snapshot")
        times = [snapshot.t for snapshot in self.snapshots]
        if any(later <= earlier for earlier, later in zip(times, times[1:], strict=False)):
            raise ValidationFailure("snapshot times must be strictly increasing")
        if any(snapshot.field.grid != self.grid for snapshot in self.snapshots):
            raise FieldMismatchError("all snapshots must share the trajectory grid")

    @property
    def times(self) -> NDArray[np.float64]:
        return np.array([snapshot.t for snapshot in self.snapshots])

    @property
    def initial(self) -> Snapshot:
        return self.snapshots[0]

    @property
    def final(self) -> Snapshot:
        return self.snapshots[-1]

    def index_of(self, t: float) -> int:
        times = self.times
        index = int(np.argmin(np.abs(times - t)))
        if abs(times[index] - t) > TIME_TOLERANCE * max(1.0, abs(t)):
            raise FieldMismatchError(f"no snapshot at t={t!r}")
        return index

    @classmethod
    def frozen(cls, field: RealField, times: Sequence[float]) -> "Trajectory":
        """The same field repeated at every time, e.g. for self-similar profiles."""
        return cls(grid=field.grid, snapshots=tuple(Snapshot(t=float(t), field=field) for t in times))


@dataclasses.dataclass(frozen=True, eq=False)
class ExtensionField:
    """
    Samples of the extension theta*(x, z) on the x-grid times a ladder of heights.

    values has shape (len(z_levels), *grid.shape); base is the z = 0 trace.
    """

    grid: GridSpec
    z_levels: NDArray[np.float64]
    values: NDArray[np.float64]
    base: RealField

    def __post_init__(self) -> None:
        z_levels = _frozen_array(self.z_levels, np.float64)
        values = _frozen_array(self.values, np.float64)
        if z_levels.ndim != 1 or z_levels.size == 0:
            raise ValidationFailure("z_levels must be a non-empty one-dimensional array")
        if z_levels[0] <= 0 or np.any(np.diff(z_levels) <= 0):
            raise ValidationFailure("z_levels must be positive and strictly increasing")
        if values.shape != (z_levels.size, *self.grid.shape):
            raise FieldMismatchError(f"values shape {values.shape} does not match {(z_levels.size, *self.grid.shape)}")
        if not np.all(np.isfinite(values)):
            raise ValidationFailure("extension values must be finite")
        if self.base.grid != self.grid:
            raise FieldMismatchError("base field lives on a different grid")
        object.__setattr__(self, "z_levels", z_levels)
        object.__setattr__(self, "values", values)

    @property
    def epsilon(self) -> float:
        return self.grid.epsilon

    def stack(self, below: float | None = None) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """Heights including z = 0 and the matching values, optionally only for z < below."""
        count = self.z_levels.size if below is None else int(np.searchsorted(self.z_levels, below, side="left"))
        heights = np.concatenate(([0.0], self.z_levels[:count]))
        values = np.concatenate((self.base.samples[np.newaxis], self.values[:count]), axis=0)
        return heights, values


@dataclasses.dataclass(frozen=True)
class Cylinder:
    """Q_r* = B_r x [0, r) x (t_anchor - r^alpha, t_anchor], B_r the cube of half-width r around center."""

    r: float
    alpha: float
    t_anchor: float = 1.0
    center: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if not self.r > 0:
            raise ValidationFailure(f"r must be positive, got {self.r}")
        if not 0 < self.alpha <= 2:
            raise ValidationFailure(f"alpha must be in (0, 2], got {self.alpha}")
        if self.duration > self.t_anchor * (1 + TIME_TOLERANCE):
            raise ValidationFailure(f"r^alpha={self.duration!r} exceeds t_anchor={self.t_anchor!r}")

    @property
    def duration(self) -> float:
        return float(self.r**self.alpha)

    @property
    def t_lower(self) -> float:
        return max(self.t_anchor - self.duration, 0.0)

    def center_for(self, n: int) -> tuple[float, ...]:
        return self.center if self.center is not None else (0.0,) * n
