"""De Giorgi diagnostics over extended trajectories: level sets, oscillation and Hölder bookkeeping."""

import dataclasses
import functools
import logging
import math
from collections.abc import Callable, Sequence

import numpy as np
from numpy.typing import NDArray

from core.dto import TIME_TOLERANCE, Cylinder, ExtensionField, GridSpec, Snapshot, Trajectory
from core.enums import MultiplierMethod
from core.exceptions import EmptyRegionError, FieldMismatchError, ValidationFailure
from core.extension import default_ladder, extend
from core.measures import WeightedCells, build_cells, clamp_s, select_axis, weighted_measure
from core.spectral import to_spectral

logger = logging.getLogger(__name__)

LEVEL_SCALE = 2.0
B_SMALL = 0.1
M_RANGE = (1 / 14, 1 / 6)
RESOLUTION_CELLS = 4
EXTENSION_CACHE = 8

Points = NDArray[np.float64]
FieldFunction = Callable[[Points, Points], NDArray[np.float64]]


class ExtendedTrajectory:
    """
    A trajectory together with theta* on a z-ladder for every snapshot.

    Extensions are computed on demand and only the most recent few are kept, so memory stays
    bounded for long runs. The z = 0 slice of every extension is the snapshot itself.
    """

    def __init__(
        self,
        trajectory: Trajectory,
        z_levels: NDArray[np.float64] | None = None,
        method: MultiplierMethod = MultiplierMethod.BESSEL,
        cache_size: int = EXTENSION_CACHE,
    ) -> None:
        self._trajectory = trajectory
        self._z_levels = default_ladder() if z_levels is None else np.asarray(z_levels, dtype=float)
        self._method = method
        self._precomputed: dict[int, ExtensionField] = {}
        self._extension = functools.lru_cache(maxsize=cache_size)(self._compute)

    @classmethod
    def from_trajectory(
        cls,
        trajectory: Trajectory,
        z_levels: NDArray[np.float64] | None = None,
        method: MultiplierMethod = MultiplierMethod.BESSEL,
    ) -> "ExtendedTrajectory":
        return cls(trajectory, z_levels, method)

    @classmethod
    def from_fields(cls, fields: Sequence[tuple[float, ExtensionField]]) -> "ExtendedTrajectory":
        """Wrap already computed extensions, e.g. synthetic fields for the level-set statistics."""
        if not fields:
            raise ValidationFailure("need at least one extension field")
        levels = fields[0][1].z_levels
        if any(not np.array_equal(E.z_levels, levels) for _, E in fields):
            raise FieldMismatchError("all extension fields must share the z-ladder")
        trajectory = Trajectory(
            grid=fields[0][1].grid, snapshots=tuple(Snapshot(t=float(t), field=E.base) for t, E in fields)
        )
        instance = cls(trajectory, levels)
        instance._precomputed = {index: E for index, (_, E) in enumerate(fields)}
        return instance

    @property
    def trajectory(self) -> Trajectory:
        return self._trajectory

    @property
    def grid(self) -> GridSpec:
        return self._trajectory.grid

    @property
    def times(self) -> NDArray[np.float64]:
        return self._trajectory.times

    @property
    def z_levels(self) -> NDArray[np.float64]:
        return self._z_levels

    def _compute(self, index: int) -> ExtensionField:
        if index in self._precomputed:
            return self._precomputed[index]
        snapshot = self._trajectory.snapshots[index]
        return extend(to_spectral(snapshot.field), self._z_levels, self._method)

    def extension(self, index: int) -> ExtensionField:
        return self._extension(index)

    def stack(self, index: int, below: float | None = None) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        return self.extension(index).stack(below)


@dataclasses.dataclass(frozen=True, eq=False)
class CylinderNodes:
    """Grid nodes of a cylinder: snapshot indices, heights below r and per-axis x indices."""

    snapshot_indices: NDArray[np.intp]
    axis_indices: tuple[NDArray[np.intp], ...]
    cells: WeightedCells

    def values(self, ext: ExtendedTrajectory) -> NDArray[np.float64]:
        """theta* on the nodes, shape (nt, nz, nx_1, ..., nx_n)."""
        nz = self.cells.heights.size
        slices = []
        for index in self.snapshot_indices:
            _, stacked = ext.stack(int(index), below=self.cells.z_upper)
            slices.append(stacked[np.ix_(np.arange(nz), *self.axis_indices)])
        return np.stack(slices)


def _time_window(times: NDArray[np.float64], t_lower: float, t_anchor: float) -> NDArray[np.intp]:
    """Snapshot indices with t in (t_lower, t_anchor]; t_anchor itself must be a snapshot time."""
    tolerance = TIME_TOLERANCE * max(1.0, abs(t_anchor))
    if not np.any(np.abs(times - t_anchor) <= tolerance):
        raise FieldMismatchError(f"cylinder anchor t={t_anchor!r} is not a snapshot time")
    return np.flatnonzero((times > t_lower + tolerance) & (times <= t_anchor + tolerance))


def _spatial_selection(
    grid: GridSpec, r: float, center: Sequence[float]
) -> tuple[tuple[NDArray[np.intp], ...], tuple[NDArray[np.float64], ...]]:
    if 2 * r > grid.L * (1 + 1e-12):
        raise FieldMismatchError(f"cylinder of radius {r!r} does not fit the period {grid.L!r}")
    axis = np.arange(grid.N) * grid.dx
    picks = [select_axis(axis, c, grid.L, r, 1e-9 * grid.dx) for c in center]
    indices = tuple(p[0] for p in picks)
    offsets = tuple(p[1] for p in picks)
    if any(i.size == 0 for i in indices):
        raise EmptyRegionError(f"no grid nodes within distance {r!r} of {tuple(center)}")
    return indices, offsets


def _check_ladder(z_levels: NDArray[np.float64], r: float) -> None:
    if z_levels[-1] < r * (1 - 1e-12):
        raise FieldMismatchError(f"z-ladder ends at {z_levels[-1]!r}, below the cylinder height {r!r}")


def box_nodes(
    ext: ExtendedTrajectory, r: float, center: Sequence[float], t_lower: float, t_anchor: float
) -> CylinderNodes:
    """Nodes of B_r(center) x [0, r) x (t_lower, t_anchor] with their weighted cells."""
    grid = ext.grid
    _check_ladder(ext.z_levels, r)
    snapshot_indices = _time_window(ext.times, t_lower, t_anchor)
    if snapshot_indices.size == 0:
        raise EmptyRegionError(f"no snapshot inside ({t_lower!r}, {t_anchor!r}]")
    axis_indices, offsets = _spatial_selection(grid, r, center)
    heights, _ = ext.stack(int(snapshot_indices[0]), below=r)
    cells = build_cells(
        times=ext.times[snapshot_indices],
        heights=heights,
        offsets=offsets,
        epsilon=grid.epsilon,
        t_bounds=(t_lower, t_anchor),
        z_upper=r,
        half_width=r,
    )
    return CylinderNodes(snapshot_indices=snapshot_indices, axis_indices=axis_indices, cells=cells)


def cylinder_nodes(ext: ExtendedTrajectory, cyl: Cylinder) -> CylinderNodes:
    grid = ext.grid
    if not math.isclose(cyl.alpha, grid.alpha, rel_tol=1e-12):
        raise FieldMismatchError(f"cylinder alpha {cyl.alpha!r} differs from the grid alpha {grid.alpha!r}")
    return box_nodes(ext, cyl.r, cyl.center_for(grid.n), cyl.t_anchor - cyl.duration, cyl.t_anchor)


def _positive_gradient_density(
    values: NDArray[np.float64], heights: NDArray[np.float64], dx: float
) -> NDArray[np.float64]:
    """|grad u_+|^2 per node for u of shape (nz, nx_1, ...), periodic central differences in x."""
    positive = np.maximum(values, 0.0)
    density = np.zeros_like(positive)
    for axis in range(1, positive.ndim):
        slope = (np.roll(positive, -1, axis=axis) - np.roll(positive, 1, axis=axis)) / (2 * dx)
        density += slope**2
    if heights.size > 1:
        density += np.gradient(positive, heights, axis=0) ** 2
    return density


def _slice_energy(
    E_heights: NDArray[np.float64],
    E_values: NDArray[np.float64],
    nodes_indices: tuple[NDArray[np.intp], ...],
    weights: NDArray[np.float64],
    dx: float,
) -> float:
    density = _positive_gradient_density(E_values, E_heights, dx)
    region = density[np.ix_(np.arange(E_heights.size), *nodes_indices)]
    return float(np.sum(region * weights))


@dataclasses.dataclass(frozen=True, slots=True)
class LevelSetStats:
    """
    z^eps-weighted measures of {v* <= 0}, {v* >= 1} and {0 < v* < 1} for v* = 2 theta*.

    S is measC clamped at 1/100; dirichlet is int z^eps |grad v*_+|^2 over the cylinder.
    """

    measA: float
    measB: float
    measC: float
    S: float
    dirichlet: float
    total: float


def level_set_stats(ext: ExtendedTrajectory, cyl: Cylinder, scale: float = LEVEL_SCALE) -> LevelSetStats:
    nodes = cylinder_nodes(ext, cyl)
    scaled = scale * nodes.values(ext)
    cells = nodes.cells
    below = scaled <= 0
    above = scaled >= 1
    measA = weighted_measure(below, cells)
    measB = weighted_measure(above, cells)
    measC = weighted_measure(~(below | above), cells)

    spatial = cells.spatial()
    grid = ext.grid
    energy = 0.0
    for length, index in zip(cells.time_lengths, nodes.snapshot_indices, strict=True):
        heights, stacked = ext.stack(int(index), below=cyl.r)
        energy += length * _slice_energy(heights, scale * stacked, nodes.axis_indices, spatial, grid.dx)
    logger.debug(f"level sets on r={cyl.r!r}: A={measA:.6g} B={measB:.6g} C={measC:.6g} energy={energy:.6g}")
    return LevelSetStats(
        measA=measA, measB=measB, measC=measC, S=clamp_s(measC), dirichlet=energy, total=cells.total
    )


@dataclasses.dataclass(frozen=True, slots=True)
class IsoperimetricCheck:
    """
    C** |C| >= |A|^2 |B|^2 on one time slice of B_r*.

    Measures are fractions of |B_r*|_{z^eps}; energy is the raw weighted Dirichlet energy of
    v*_+ on the slice and Cstar = max(energy, energy_cap).
    """

    a: float
    b: float
    c: float
    energy: float
    Cstar: float
    lhs: float
    rhs: float
    satisfied: bool

    @property
    def required_constant(self) -> float:
        """Smallest constant that makes the inequality hold."""
        if self.rhs == 0:
            return 0.0
        return math.inf if self.c == 0 else self.rhs / self.c

    def within_energy_factor(self, factor: float = 10.0) -> bool:
        return self.required_constant <= factor * self.energy


def isoperimetric_check(
    E: ExtensionField,
    energy_cap: float = 0.0,
    r: float = 4.0,
    center: Sequence[float] | None = None,
    scale: float = LEVEL_SCALE,
) -> IsoperimetricCheck:
    grid = E.grid
    if E.z_levels[-1] < r * (1 - 1e-12):
        raise FieldMismatchError(f"z-ladder ends at {E.z_levels[-1]!r}, below the slice height {r!r}")
    axis_indices, offsets = _spatial_selection(grid, r, center if center is not None else (0.0,) * grid.n)
    heights, stacked = E.stack(below=r)
    cells = build_cells(
        times=[0.0],
        heights=heights,
        offsets=offsets,
        epsilon=grid.epsilon,
        t_bounds=(-1.0, 0.0),
        z_upper=r,
        half_width=r,
    )
    spatial = cells.spatial()
    total = float(np.sum(spatial))
    values = scale * stacked[np.ix_(np.arange(heights.size), *axis_indices)]
    below = values <= 0
    above = values >= 1
    a = float(np.sum(spatial, where=below)) / total
    b = float(np.sum(spatial, where=above)) / total
    c = float(np.sum(spatial, where=~(below | above))) / total
    energy = _slice_energy(heights, scale * stacked, axis_indices, spatial, grid.dx)
    cstar = max(energy, energy_cap)
    lhs, rhs = cstar * c, a**2 * b**2
    return IsoperimetricCheck(a=a, b=b, c=c, energy=energy, Cstar=cstar, lhs=lhs, rhs=rhs, satisfied=lhs >= rhs)


@dataclasses.dataclass(frozen=True, slots=True)
class SecondLemmaBound:
    """
    int_{A*} z^eps (theta* - 1/2)_+^2 + int_A (theta - 1/2)_+^2 against S^(m alpha / 2).

    The conclusion has two readings, exponent 0.05 alpha and 0.005 alpha; both are
    evaluated and the measured exponent log(lhs) / log(S) is reported.
    """

    lhs: float
    S: float
    exponent: float
    measured_exponent: float
    bound_strong: bool
    bound_weak: bool
    hypotheses_hold: bool


def second_lemma_bound(
    ext: ExtendedTrajectory, a: float, t_anchor: float, m: float = B_SMALL, C: float = 1.0
) -> SecondLemmaBound:
    """
    Evaluate the conclusion of the second technical lemma on Q_4* anchored at t_anchor.

    A = B_4 x [t_anchor - a^alpha, t_anchor]; the hypotheses are theta* <= 1 on Q_4* and
    |{theta* <= 0}| >= |Q_4*| / 2.
    """
    lower, upper = M_RANGE
    if not lower < m < upper:
        raise ValidationFailure(f"m must lie in ({lower!r}, {upper!r}), got {m!r}")
    grid = ext.grid
    alpha = grid.alpha
    if not 0 < a < 4 / 2.0 ** (1 / alpha):
        raise ValidationFailure(f"a must lie in (0, 4 / 2^(1/alpha)), got {a!r}")
    centre = (0.0,) * grid.n

    q4 = Cylinder(r=4.0, alpha=alpha, t_anchor=t_anchor)
    full = cylinder_nodes(ext, q4)
    theta = full.values(ext)
    below = weighted_measure(theta <= 0, full.cells)
    hypotheses = bool(np.all(theta <= 1.0)) and below >= full.cells.total / 2
    stats = level_set_stats(ext, q4)

    window = box_nodes(ext, 4.0, centre, t_anchor - a**alpha, t_anchor)
    excess = np.maximum(window.values(ext) - 0.5, 0.0) ** 2
    bulk = float(np.sum(excess * window.cells.weights()))
    lateral = window.cells.axis_lengths[0]
    for factor in window.cells.axis_lengths[1:]:
        lateral = np.multiply.outer(lateral, factor)
    trace = float(np.sum(np.multiply.outer(window.cells.time_lengths, lateral) * excess[:, 0]))
    lhs = bulk + trace

    exponent = m / 2 * alpha
    S = stats.S
    measured = math.log(lhs) / math.log(S) if lhs > 0 and 0 < S < 1 else math.inf
    logger.debug(f"second lemma: lhs={lhs:.6g} S={S:.6g} measured exponent={measured:.6g}")
    return SecondLemmaBound(
        lhs=lhs,
        S=S,
        exponent=exponent,
        measured_exponent=measured,
        bound_strong=lhs <= C * S**exponent,
        bound_weak=lhs <= S ** (exponent / 10),
        hypotheses_hold=hypotheses,
    )


@dataclasses.dataclass(frozen=True)
class OscillationSequence:
    radii: tuple[float, ...]
    oscillations: tuple[float, ...]
    truncated: bool
    fitted_exponent: float


def _oscillations(traj: Trajectory | ExtendedTrajectory, cylinders: Sequence[Cylinder]) -> list[float]:
    """
    sup - inf of theta* over each cylinder, all anchored at the same time.

    Snapshots are visited once; every snapshot updates the cylinders whose window holds it.
    A plain trajectory is treated as theta* restricted to z = 0.
    """
    ext = traj if isinstance(traj, ExtendedTrajectory) else None
    trajectory = traj.trajectory if isinstance(traj, ExtendedTrajectory) else traj
    grid = trajectory.grid
    r_max = max(cyl.r for cyl in cylinders)
    if ext is not None:
        _check_ladder(ext.z_levels, r_max)
    windows = [
        set(_time_window(trajectory.times, cyl.t_anchor - cyl.duration, cyl.t_anchor).tolist()) for cyl in cylinders
    ]
    if any(not window for window in windows):
        raise EmptyRegionError("a cylinder holds no snapshot")
    selections = [_spatial_selection(grid, cyl.r, cyl.center_for(grid.n))[0] for cyl in cylinders]

    highs = [-math.inf] * len(cylinders)
    lows = [math.inf] * len(cylinders)
    for index in sorted(set().union(*windows)):
        if ext is not None:
            heights, stacked = ext.stack(index, below=r_max)
        else:
            heights, stacked = np.zeros(1), trajectory.snapshots[index].field.samples[np.newaxis]
        for slot, (cyl, window, axes) in enumerate(zip(cylinders, windows, selections, strict=True)):
            if index not in window:
                continue
            levels = np.arange(int(np.searchsorted(heights, cyl.r, side="left")))
            region = stacked[np.ix_(levels, *axes)]
            highs[slot] = max(highs[slot], float(np.max(region)))
            lows[slot] = min(lows[slot], float(np.min(region)))
    return [high - low for high, low in zip(highs, lows, strict=True)]


def oscillation(traj: Trajectory | ExtendedTrajectory, cyl: Cylinder) -> float:
    return _oscillations(traj, [cyl])[0]


def oscillation_decay_sequence(
    traj: Trajectory | ExtendedTrajectory,
    rho: float,
    k_max: int,
    r_start: float = 1.0,
    t_anchor: float | None = None,
    center: Sequence[float] | None = None,
    skip: int = 2,
) -> OscillationSequence:
    """
    Oscillations over the nested cylinders of radii r_start rho^k, k = 0..k_max.

    The sequence stops once r falls below four grid cells (truncated = True). The fitted
    exponent is the least-squares slope of log osc against log r over levels k >= skip with
    positive oscillation, nan when fewer than two such levels remain.
    """
    if not 0 < rho < 1:
        raise ValidationFailure(f"rho must be in (0, 1), got {rho}")
    if k_max < 0:
        raise ValidationFailure(f"k_max must be non-negative, got {k_max}")
    trajectory = traj.trajectory if isinstance(traj, ExtendedTrajectory) else traj
    grid = trajectory.grid
    anchor = float(trajectory.times[-1]) if t_anchor is None else t_anchor
    floor = RESOLUTION_CELLS * grid.dx

    radii = []
    truncated = False
    for k in range(k_max + 1):
        r = r_start * rho**k
        if r < floor * (1 - 1e-12):
            truncated = True
            break
        radii.append(r)
    if not radii:
        raise EmptyRegionError(f"r_start={r_start!r} is already below the resolution floor {floor!r}")
    center_tuple = tuple(center) if center is not None else None
    cylinders = [Cylinder(r=r, alpha=grid.alpha, t_anchor=anchor, center=center_tuple) for r in radii]
    values = _oscillations(traj, cylinders)
    if truncated:
        logger.debug(f"oscillation sequence truncated at r={radii[-1]!r}, floor {floor!r}")

    usable = [(r, osc) for k, (r, osc) in enumerate(zip(radii, values, strict=True)) if k >= skip and osc > 0]
    fitted = math.nan
    if len(usable) >= 2:
        logs = np.log(np.array(usable))
        fitted = float(np.polyfit(logs[:, 0], logs[:, 1], 1)[0])
    return OscillationSequence(
        radii=tuple(radii), oscillations=tuple(values), truncated=truncated, fitted_exponent=fitted
    )


def holder_seminorm(theta_samples: NDArray[np.float64], dx: float, exponent: float) -> float:
    """
    max |theta(x + h) - theta(x)| / |h|^exponent over dyadic axis and diagonal offsets h.

    Offsets are 2^j cells for 2^j <= N/2, so the periodic distance is the plain length of h.
    """
    if not 0 < exponent <= 1:
        raise ValidationFailure(f"exponent must be in (0, 1], got {exponent}")
    samples = np.asarray(theta_samples, dtype=float)
    n, N = samples.ndim, samples.shape[0]
    directions = [tuple(int(i == axis) for i in range(n)) for axis in range(n)]
    if n > 1:
        directions.append((1,) * n)
    best = 0.0
    cells = 1
    while cells <= N // 2:
        for direction in directions:
            shift = tuple(cells * d for d in direction)
            distance = dx * cells * math.sqrt(sum(direction))
            jump = np.abs(np.roll(samples, shift, axis=tuple(range(n))) - samples)
            best = max(best, float(np.max(jump)) / distance**exponent)
        cells *= 2
    return best


def recentering_level(sup: float, inf: float) -> float:
    """Level m subtracted before rescaling so that the rescaled field stays below its bound."""
    return (255 * sup + inf) / 256


def rescale_iterates(theta: FieldFunction, r0: float, alpha: float, means: Sequence[float]) -> list[FieldFunction]:
    """theta_k(x, t) = r0^-alpha (theta_{k-1}(r0 x, 1 - r0^alpha (1 - t)) - m_{k-1}), theta_0 = theta."""
    if not 0 < r0 < 1:
        raise ValidationFailure(f"r0 must be in (0, 1), got {r0}")
    iterates = [theta]
    for mean in means:
        previous = iterates[-1]

        def step(x: Points, t: Points, f: FieldFunction = previous, m: float = mean) -> NDArray[np.float64]:
            return r0 ** (-alpha) * (f(r0 * x, 1 - r0**alpha * (1 - t)) - m)

        iterates.append(step)
    return iterates


def rescale_closed_form(theta: FieldFunction, r0: float, alpha: float, means: Sequence[float]) -> FieldFunction:
    """r0^(-k alpha) (theta(r0^k x, 1 - r0^(k alpha) (1 - t)) - sum_j r0^(j alpha) m_j)."""
    k = len(means)
    shift = sum(r0 ** (j * alpha) * m for j, m in enumerate(means))

    def closed(x: Points, t: Points) -> NDArray[np.float64]:
        return r0 ** (-k * alpha) * (theta(r0**k * x, 1 - r0 ** (k * alpha) * (1 - t)) - shift)

    return closed


def dyadic_truncation(theta: NDArray[np.float64], k: int) -> NDArray[np.float64]:
    """theta_k = 2 (theta_{k-1} - 1/2) applied k times."""
    if k < 0:
        raise ValidationFailure(f"k must be non-negative, got {k}")
    values = np.asarray(theta, dtype=float)
    for _ in range(k):
        values = 2 * (values - 0.5)
    return values


def dyadic_closed_form(theta: NDArray[np.float64], k: int) -> NDArray[np.float64]:
    return np.asarray(2.0**k * (np.asarray(theta, dtype=float) - 1) + 1)
