"""
Measures weighted by z^eps dz dx dt on cylinders Q_r* = B_r x [0, r) x (t - r^alpha, t].

Grid nodes carry dual cells: each node owns the segment between the midpoints to its
neighbours, clipped to the box. In z the weight of a cell [a, b] is the exact integral
(b^(1+eps) - a^(1+eps)) / (1+eps), so every slab-aligned region is integrated exactly.
"""

import dataclasses
import logging
import math
from collections.abc import Callable, Sequence

import numpy as np
from numpy.typing import NDArray

from core.exceptions import FieldMismatchError, ValidationFailure

logger = logging.getLogger(__name__)

S_CAP = 0.01


def dual_cell_edges(nodes: NDArray[np.float64], lower: float, upper: float) -> NDArray[np.float64]:
    """Midpoints between sorted nodes, closed by the box ends."""
    nodes = np.asarray(nodes, dtype=float)
    if nodes.ndim != 1 or nodes.size == 0:
        raise ValidationFailure("dual cells need a non-empty one-dimensional node array")
    if np.any(np.diff(nodes) <= 0):
        raise ValidationFailure("nodes must be strictly increasing")
    if not lower <= upper:
        raise ValidationFailure(f"need lower <= upper, got ({lower!r}, {upper!r})")
    return np.concatenate(([lower], 0.5 * (nodes[1:] + nodes[:-1]), [upper]))


def graded_weights(edges: NDArray[np.float64], epsilon: float) -> NDArray[np.float64]:
    """int_a^b z^eps dz for consecutive edges a < b on [0, inf)."""
    if not -1 < epsilon < 1:
        raise ValidationFailure(f"epsilon must be in (-1, 1), got {epsilon}")
    edges = np.asarray(edges, dtype=float)
    if np.any(edges < 0):
        raise ValidationFailure("heights must be non-negative")
    power = edges ** (1 + epsilon)
    return np.diff(power) / (1 + epsilon)


@dataclasses.dataclass(frozen=True, eq=False)
class WeightedCells:
    """
    Product quadrature over (t, z, x_1, ..., x_n) nodes.

    Attributes:
        times: Time nodes inside (t_lower, t_upper]
        heights: Height nodes inside [0, z_upper)
        offsets: Per spatial axis, node offsets from the cube centre inside [-r, r]
        epsilon: Exponent of the z weight
        bounds: (t_lower, t_upper), z_upper and the half-width r of the cube
    """

    times: NDArray[np.float64]
    heights: NDArray[np.float64]
    offsets: tuple[NDArray[np.float64], ...]
    epsilon: float
    t_bounds: tuple[float, float]
    z_upper: float
    half_width: float

    @property
    def time_lengths(self) -> NDArray[np.float64]:
        return np.diff(dual_cell_edges(self.times, *self.t_bounds))

    @property
    def height_weights(self) -> NDArray[np.float64]:
        return graded_weights(dual_cell_edges(self.heights, 0.0, self.z_upper), self.epsilon)

    @property
    def axis_lengths(self) -> tuple[NDArray[np.float64], ...]:
        return tuple(np.diff(dual_cell_edges(d, -self.half_width, self.half_width)) for d in self.offsets)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.times.size, self.heights.size, *(d.size for d in self.offsets))

    def spatial(self) -> NDArray[np.float64]:
        """Weights of one time slice, shape (nz, nx_1, ..., nx_n)."""
        factors = [self.height_weights, *self.axis_lengths]
        weights = factors[0]
        for factor in factors[1:]:
            weights = np.multiply.outer(weights, factor)
        return np.asarray(weights)

    def weights(self) -> NDArray[np.float64]:
        return np.asarray(np.multiply.outer(self.time_lengths, self.spatial()))

    @property
    def total(self) -> float:
        return float(np.sum(self.weights()))


def weighted_measure(indicator: NDArray[np.bool_], cells: WeightedCells) -> float:
    """|E|_{z^eps} for E given by its indicator on the cell nodes."""
    indicator = np.asarray(indicator, dtype=bool)
    if indicator.shape != cells.shape:
        raise FieldMismatchError(f"indicator shape {indicator.shape} does not match cells {cells.shape}")
    return float(np.sum(cells.weights(), where=indicator))


def cylinder_measure(r: float, n: int, alpha: float) -> float:
    """|Q_r*|_{z^eps} = (2r)^n r^(1+eps) / (1+eps) r^alpha with eps = 1 - alpha."""
    if not r > 0:
        raise ValidationFailure(f"r must be positive, got {r}")
    epsilon = 1.0 - alpha
    return float((2 * r) ** n * r ** (1 + epsilon) / (1 + epsilon) * r**alpha)


def monte_carlo_measure(
    indicator: Callable[[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]], NDArray[np.bool_]],
    r: float,
    n: int,
    alpha: float,
    t_anchor: float,
    samples: int = 200_000,
    seed: int = 0,
) -> float:
    """
    Monte Carlo estimate of |E|_{z^eps} for E inside Q_r*.

    Heights are drawn from the density proportional to z^eps on [0, r) by inversion,
    z = r U^(1/(1+eps)), so the estimate is the hit fraction times |Q_r*|_{z^eps}.
    indicator receives x of shape (samples, n), z and t of shape (samples,).
    """
    if samples < 1:
        raise ValidationFailure(f"samples must be positive, got {samples}")
    rng = np.random.default_rng(seed)
    epsilon = 1.0 - alpha
    x = rng.uniform(-r, r, size=(samples, n))
    z = r * rng.uniform(size=samples) ** (1 / (1 + epsilon))
    t = t_anchor - r**alpha * rng.uniform(size=samples)
    hits = np.asarray(indicator(x, z, t), dtype=bool)
    return float(np.mean(hits)) * cylinder_measure(r, n, alpha)


def k_plus(S: float, measure: float) -> int:
    """K+ = ceil((1/S + 1) |Q_4*|_{z^eps})."""
    if not S > 0:
        raise ValidationFailure(f"S must be positive, got {S}")
    if not measure >= 0:
        raise ValidationFailure(f"measure must be non-negative, got {measure}")
    return math.ceil((1 / S + 1) * measure)


def clamp_s(measure_c: float) -> float:
    return min(measure_c, S_CAP)


def axis_offsets(coordinates: NDArray[np.float64], centre: float, period: float) -> NDArray[np.float64]:
    """Periodic offsets of 1-d node coordinates from centre, in [-period/2, period/2)."""
    return np.asarray(np.mod(coordinates - centre + period / 2, period) - period / 2)


def select_axis(
    coordinates: NDArray[np.float64], centre: float, period: float, half_width: float, tolerance: float
) -> tuple[NDArray[np.intp], NDArray[np.float64]]:
    """Node indices with |offset| <= half_width, sorted by offset."""
    if 2 * half_width > period * (1 + 1e-12):
        raise FieldMismatchError(f"cube of half-width {half_width!r} does not fit the period {period!r}")
    offsets = axis_offsets(coordinates, centre, period)
    inside = np.flatnonzero(np.abs(offsets) <= half_width + tolerance)
    order = np.argsort(offsets[inside], kind="stable")
    indices = inside[order]
    return indices, np.clip(offsets[indices], -half_width, half_width)


def build_cells(
    times: Sequence[float],
    heights: Sequence[float],
    offsets: Sequence[NDArray[np.float64]],
    epsilon: float,
    t_bounds: tuple[float, float],
    z_upper: float,
    half_width: float,
) -> WeightedCells:
    return WeightedCells(
        times=np.asarray(times, dtype=float),
        heights=np.asarray(heights, dtype=float),
        offsets=tuple(np.asarray(d, dtype=float) for d in offsets),
        epsilon=epsilon,
        t_bounds=t_bounds,
        z_upper=z_upper,
        half_width=half_width,
    )
