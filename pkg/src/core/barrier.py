"""
Barrier function of the alpha-harmonic maximum principle.

F(x, z) = K_n^-1 int_psi z^alpha / (z^2 + |x - y|^2)^((n + alpha)/2) dy, psi the indicator of the
cubes of half-width omega centred at +-(4, ..., 4). K_n is the value at x = 0, z = 4.
"""

import dataclasses
import logging
import math

import numpy as np
from numpy.typing import NDArray

from core.exceptions import QuadratureError, ValidationFailure

logger = logging.getLogger(__name__)

CUBE_OFFSET = 4.0
QUADRATURE_BUDGET = 4096
POINT_CHUNK = 256
QUADRATURE_TOLERANCE = 1e-6


@dataclasses.dataclass(frozen=True)
class BarrierSpec:
    omega: float
    c0: float
    n: int = 2
    alpha: float = 0.75

    def __post_init__(self) -> None:
        if not 0 < self.alpha < 2:
            raise ValidationFailure(f"alpha must be in (0, 2), got {self.alpha}")
        if not 1 <= self.n <= 3:
            raise ValidationFailure(f"n must be between 1 and 3, got {self.n}")
        lower = 32 / 2.0 ** (6 / self.alpha)
        if not lower < self.c0 < 1:
            raise ValidationFailure(f"c0 must lie in ({lower!r}, 1), got {self.c0!r}")
        if not 0 < self.omega < 2 * (1 - self.c0):
            raise ValidationFailure(f"omega must lie in (0, {2 * (1 - self.c0)!r}), got {self.omega!r}")


@dataclasses.dataclass(frozen=True)
class BarrierReport:
    spec: BarrierSpec
    K_exact: float
    K_approx: float
    sup_inner: float
    sup_point: tuple[float, ...]
    inf_boundary: float
    inf_point: tuple[float, ...]
    analytic_upper_bound: float
    quadrature_error: float

    @property
    def inner_bound_holds(self) -> bool:
        return self.sup_inner < self.spec.c0**self.spec.alpha

    @property
    def boundary_bound_holds(self) -> bool:
        return self.inf_boundary >= 1.0


class BarrierQuadrature:
    """Tensor Gauss-Legendre rule on both cubes, evaluated over chunks of points."""

    def __init__(self, spec: BarrierSpec, nodes_per_axis: int | None = None) -> None:
        self._spec = spec
        count = nodes_per_axis or int(math.floor(QUADRATURE_BUDGET ** (1 / spec.n) + 1e-9))
        nodes, weights = np.polynomial.legendre.leggauss(count)
        axes_nodes = [nodes * spec.omega] * spec.n
        axes_weights = [weights * spec.omega] * spec.n
        grid_nodes = np.stack(np.meshgrid(*axes_nodes, indexing="ij"), axis=-1).reshape(-1, spec.n)
        grid_weights = np.prod(np.stack(np.meshgrid(*axes_weights, indexing="ij"), axis=-1), axis=-1).ravel()
        centre = np.full(spec.n, CUBE_OFFSET)
        self._nodes = np.concatenate((grid_nodes + centre, grid_nodes - centre))
        self._weights = np.concatenate((grid_weights, grid_weights))

    def unnormalized(self, x: NDArray[np.float64], z: NDArray[np.float64]) -> NDArray[np.float64]:
        """(P_z * psi)(x) without the Poisson constant, x of shape (m, n), z of shape (m,)."""
        spec = self._spec
        x = np.atleast_2d(np.asarray(x, dtype=float))
        z = np.atleast_1d(np.asarray(z, dtype=float))
        result = np.empty(x.shape[0])
        for start in range(0, x.shape[0], POINT_CHUNK):
            stop = start + POINT_CHUNK
            squared = np.sum((x[start:stop, np.newaxis, :] - self._nodes[np.newaxis]) ** 2, axis=-1)
            height = z[start:stop, np.newaxis]
            kernel = height**spec.alpha / (height**2 + squared) ** ((spec.n + spec.alpha) / 2)
            result[start:stop] = kernel @ self._weights
        return result


def _inner_points(spec: BarrierSpec, samples: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Closure of B_{c0}* = [-c0, c0]^n x [0, c0)."""
    side = np.linspace(-spec.c0, spec.c0, samples)
    heights = np.linspace(0.0, spec.c0, samples)
    mesh = np.stack(np.meshgrid(*([side] * spec.n), heights, indexing="ij"), axis=-1).reshape(-1, spec.n + 1)
    return mesh[:, : spec.n], mesh[:, spec.n]


def _boundary_points(spec: BarrierSpec, samples: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Lateral faces |x_j| = 4 for z in (0, 4] and the top z = 4."""
    side = np.linspace(-CUBE_OFFSET, CUBE_OFFSET, samples)
    heights = np.linspace(CUBE_OFFSET / samples, CUBE_OFFSET, samples)
    xs, zs = [], []
    for axis in range(spec.n):
        for face in (-CUBE_OFFSET, CUBE_OFFSET):
            axes = [side] * spec.n
            axes[axis] = np.array([face])
            mesh = np.stack(np.meshgrid(*axes, heights, indexing="ij"), axis=-1).reshape(-1, spec.n + 1)
            xs.append(mesh[:, : spec.n])
            zs.append(mesh[:, spec.n])
    top = np.stack(np.meshgrid(*([side] * spec.n), indexing="ij"), axis=-1).reshape(-1, spec.n)
    xs.append(top)
    zs.append(np.full(top.shape[0], CUBE_OFFSET))
    return np.concatenate(xs), np.concatenate(zs)


def normalization_constant(spec: BarrierSpec, quadrature: BarrierQuadrature | None = None) -> float:
    rule = quadrature or BarrierQuadrature(spec)
    return float(rule.unnormalized(np.zeros((1, spec.n)), np.array([CUBE_OFFSET]))[0])


def approximate_normalization(spec: BarrierSpec) -> float:
    """The approximation 2 omega^n / (1 + n)^((n + alpha)/2) used in place of K_n."""
    return 2 * spec.omega**spec.n / (1 + spec.n) ** ((spec.n + spec.alpha) / 2)


def analytic_upper_bound(spec: BarrierSpec, K: float) -> float:
    """c0^alpha omega^n / (K n^((n+alpha)/2) (4 - omega/2 - c0)^(n+alpha))."""
    n, alpha = spec.n, spec.alpha
    return spec.c0**alpha * spec.omega**n / (K * n ** ((n + alpha) / 2) * (4 - spec.omega / 2 - spec.c0) ** (n + alpha))


def barrier_field(spec: BarrierSpec, samples: int = 9) -> BarrierReport:
    """
    Sup of F over B_{c0}* and inf over the lateral and top boundary of B_4*.

    The quadrature is repeated with half the nodes per axis at the inner maximiser; a relative
    change above 1e-6 is reported as a quadrature failure.
    """
    if samples < 2:
        raise ValidationFailure(f"samples must be at least 2, got {samples}")
    rule = BarrierQuadrature(spec)
    K = normalization_constant(spec, rule)

    inner_x, inner_z = _inner_points(spec, samples)
    inner = rule.unnormalized(inner_x, inner_z) / K
    top = int(np.argmax(inner))

    coarse_nodes = max(2, int(math.floor(QUADRATURE_BUDGET ** (1 / spec.n) + 1e-9)) // 2)
    coarse = BarrierQuadrature(spec, nodes_per_axis=coarse_nodes)
    coarse_value = coarse.unnormalized(inner_x[top : top + 1], inner_z[top : top + 1])[0] / normalization_constant(
        spec, coarse
    )
    error = abs(coarse_value - inner[top]) / max(abs(inner[top]), np.finfo(float).tiny)
    if error > QUADRATURE_TOLERANCE:
        raise QuadratureError("barrier quadrature is not resolved", error)

    boundary_x, boundary_z = _boundary_points(spec, samples)
    boundary = rule.unnormalized(boundary_x, boundary_z) / K
    bottom = int(np.argmin(boundary))
    logger.debug(f"barrier sup_inner={inner[top]:.6f} inf_boundary={boundary[bottom]:.6f} K={K:.6e}")
    return BarrierReport(
        spec=spec,
        K_exact=K,
        K_approx=approximate_normalization(spec),
        sup_inner=float(inner[top]),
        sup_point=(*(float(v) for v in inner_x[top]), float(inner_z[top])),
        inf_boundary=float(boundary[bottom]),
        inf_point=(*(float(v) for v in boundary_x[bottom]), float(boundary_z[bottom])),
        analytic_upper_bound=analytic_upper_bound(spec, K),
        quadrature_error=float(error),
    )


def lambda_estimate(spec: BarrierSpec, samples: int = 9) -> float:
    """lambda = 1 - sup over B_{c0}* of the barrier."""
    report = barrier_field(spec, samples)
    value = 1.0 - report.sup_inner
    if not value > 0:
        raise ValidationFailure(f"barrier gives non-positive lambda {value!r} for {spec}")
    return value
