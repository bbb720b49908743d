"""Independent evaluations of Lambda^beta used to cross-check the spectral multiplier."""

import dataclasses
import logging
import math

import numpy as np
from numpy.typing import NDArray
from scipy import integrate, special

from core.dto import GridSpec, RealField
from core.exceptions import QuadratureError, ValidationFailure
from core.spectral import coordinates

logger = logging.getLogger(__name__)

HEAT_HORIZON = 40.0
HEAT_START = 1e-7
ORACLE_RELATIVE_TOLERANCE = 1e-10


def singular_integral_constant(n: int, beta: float) -> float:
    """C_{n,beta} = 2^beta Gamma((n+beta)/2) / (pi^(n/2) |Gamma(-beta/2)|)."""
    if not 0 < beta < 2:
        raise ValidationFailure(f"beta must be in (0, 2), got {beta}")
    return float(2**beta * special.gamma((n + beta) / 2) / (math.pi ** (n / 2) * abs(special.gamma(-beta / 2))))


@dataclasses.dataclass(frozen=True)
class PeriodicGaussian:
    """
    Product of periodized Gaussians exp(-(x_j - c_j)^2 / (2 sigma^2)) on the grid torus.

    The heat flow e^{t Delta} keeps the product form with variance sigma^2 + 2t per axis.
    """

    grid: GridSpec
    sigma: float = 0.5
    center: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if not 0 < self.sigma < self.grid.L:
            raise ValidationFailure(f"sigma must be in (0, L), got {self.sigma}")
        if self.center is not None and len(self.center) != self.grid.n:
            raise ValidationFailure(f"center needs {self.grid.n} components, got {len(self.center)}")

    def _center(self, axis: int) -> float:
        return self.grid.L / 2 if self.center is None else self.center[axis]

    def axis_profile(
        self, x: NDArray[np.float64], axis: int, t: float = 0.0
    ) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """Values and second derivatives of the heat-evolved one-dimensional factor."""
        L = self.grid.L
        variance = self.sigma**2 + 2 * t
        images = math.ceil(8 * math.sqrt(variance) / L) + 2
        shifts = L * np.arange(-images, images + 1)
        offset = (np.asarray(x)[..., np.newaxis] - self._center(axis)) + shifts
        bumps = np.exp(-(offset**2) / (2 * variance)) * (self.sigma / math.sqrt(variance))
        curvature = bumps * (offset**2 / variance**2 - 1 / variance)
        return bumps.sum(axis=-1), curvature.sum(axis=-1)

    def axis_mean(self) -> float:
        return self.sigma * math.sqrt(2 * math.pi) / self.grid.L

    @property
    def mean(self) -> float:
        return self.axis_mean() ** self.grid.n

    def _factors(self, t: float) -> tuple[list[NDArray[np.float64]], list[NDArray[np.float64]]]:
        axis = np.arange(self.grid.N) * self.grid.dx
        values, curvatures = [], []
        for j in range(self.grid.n):
            value, curvature = self.axis_profile(axis, j, t)
            values.append(value)
            curvatures.append(curvature)
        return values, curvatures

    def heat(self, t: float = 0.0) -> NDArray[np.float64]:
        values, _ = self._factors(t)
        return _outer(values)

    def laplacian(self) -> NDArray[np.float64]:
        values, curvatures = self._factors(0.0)
        total = np.zeros(self.grid.shape)
        for j in range(self.grid.n):
            total += _outer([curvatures[i] if i == j else values[i] for i in range(self.grid.n)])
        return total

    def field(self) -> RealField:
        return RealField(grid=self.grid, samples=self.heat())


def _outer(factors: list[NDArray[np.float64]]) -> NDArray[np.float64]:
    result = factors[0]
    for factor in factors[1:]:
        result = np.multiply.outer(result, factor)
    return result


def pv_fractional_laplacian_1d(gaussian: PeriodicGaussian, beta: float) -> RealField:
    """
    Principal-value quadrature of C_{1,beta} PV int (f(x) - f(x+y)) |y|^(-1-beta) dy.

    The symmetric second difference folds the real line onto one period, where the sum of
    |y + mL|^(-1-beta) over m >= 0 is L^(-1-beta) times the Hurwitz zeta function.
    """
    grid = gaussian.grid
    if grid.n != 1:
        raise ValidationFailure(f"the principal-value oracle is one-dimensional, got n = {grid.n}")
    x = coordinates(grid)[0]
    L = grid.L
    f_x, f_xx = gaussian.axis_profile(x, 0)
    # below the cut the second difference is -f'' y^2 up to O(y^4)
    cut = 1e-3 * min(gaussian.sigma, L)

    def integrand(y: float) -> NDArray[np.float64]:
        forward, _ = gaussian.axis_profile(x + y, 0)
        backward, _ = gaussian.axis_profile(x - y, 0)
        kernel = L ** (-1 - beta) * special.zeta(1 + beta, y / L)
        return np.asarray((2 * f_x - forward - backward) * kernel)

    values, error = integrate.quad_vec(integrand, cut, L, epsabs=1e-13, epsrel=ORACLE_RELATIVE_TOLERANCE)
    scale = float(np.max(np.abs(values))) or 1.0
    if error > 1e-6 * scale:
        raise QuadratureError("principal-value oracle did not converge", error)
    near = -f_xx * (cut ** (2 - beta) / (2 - beta) + L ** (-1 - beta) * special.zeta(1 + beta, 1.0) * cut**3 / 3)
    logger.debug(f"PV oracle beta={beta} error bound {error:.2e}")
    return RealField(grid=grid, samples=singular_integral_constant(1, beta) * (values + near))


def semigroup_fractional_laplacian(gaussian: PeriodicGaussian, beta: float) -> RealField:
    """
    (-Delta)^s f = |Gamma(-s)|^-1 int_0^inf (f - e^{t Delta} f) t^(-1-s) dt with s = beta/2.

    Integrated in u = log t between HEAT_START and HEAT_HORIZON (in units of (L/2pi)^2); the
    piece below uses f - e^{t Delta} f = -t Delta f, the piece above uses e^{t Delta} f = mean.
    """
    if not 0 < beta < 2:
        raise ValidationFailure(f"beta must be in (0, 2), got {beta}")
    s = beta / 2
    unit = (gaussian.grid.L / (2 * math.pi)) ** 2
    t_start, t_stop = HEAT_START * unit, HEAT_HORIZON * unit
    f = gaussian.heat()

    def integrand(u: float) -> NDArray[np.float64]:
        t = math.exp(u)
        return np.asarray((f - gaussian.heat(t)) * t ** (-s))

    values, error = integrate.quad_vec(
        integrand, math.log(t_start), math.log(t_stop), epsabs=1e-13, epsrel=ORACLE_RELATIVE_TOLERANCE
    )
    scale = float(np.max(np.abs(values))) or 1.0
    if error > 1e-6 * scale:
        raise QuadratureError("semigroup oracle did not converge", error)
    lower = -gaussian.laplacian() * t_start ** (1 - s) / (1 - s)
    upper = (f - gaussian.mean) * t_stop ** (-s) / s
    total = (values + lower + upper) / abs(special.gamma(-s))
    logger.debug(f"semigroup oracle beta={beta} error bound {error:.2e}")
    return RealField(grid=gaussian.grid, samples=total)
