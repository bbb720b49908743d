"""Caffarelli-Silvestre extension of periodic fields to the upper half space."""

import dataclasses
import functools
import logging
import math

import numpy as np
from numpy.typing import NDArray
from scipy import integrate, special

from core.dto import ExtensionField, GridSpec, RealField, SpectralField
from core.enums import MultiplierMethod
from core.exceptions import ExtrapolationError, QuadratureError, UnresolvedTailError, ValidationFailure
from core.spectral import sobolev_seminorm, symbol, to_real, to_spectral, wavenumbers

logger = logging.getLogger(__name__)

MULTIPLIER_TOLERANCE = 1e-9
EXTRAPOLATION_DISAGREEMENT = 0.5
TAIL_DECAY_PRODUCT = 6.0
LADDER_RATIO_TOLERANCE = 1e-6
EXP_LIMIT = 700.0
DEFAULT_LADDER = (1e-4, 8.0, 48)


def default_ladder(
    z_min: float = DEFAULT_LADDER[0], z_max: float = DEFAULT_LADDER[1], levels: int = int(DEFAULT_LADDER[2])
) -> NDArray[np.float64]:
    """Geometric z-ladder, fine near z = 0 for the trace and long enough for the energy tail."""
    if not 0 < z_min < z_max or levels < 3:
        raise ValidationFailure(f"need 0 < z_min < z_max and levels >= 3, got ({z_min}, {z_max}, {levels})")
    return np.geomspace(z_min, z_max, levels)


def _check_order(alpha: float) -> None:
    if not 0 < alpha < 2:
        raise ValidationFailure(f"alpha must be in (0, 2), got {alpha}")


def poisson_normalization(n: int, alpha: float) -> float:
    """C_{n,alpha} = Gamma((n+alpha)/2) / (pi^(n/2) Gamma(alpha/2)), so that int P_z^alpha dx = 1."""
    _check_order(alpha)
    if n < 1:
        raise ValidationFailure(f"n must be at least 1, got {n}")
    return float(special.gamma((n + alpha) / 2) / (math.pi ** (n / 2) * special.gamma(alpha / 2)))


def poisson_mass(n: int, alpha: float, normalization: float | None = None) -> float:
    """
    int_{R^n} C (1 + |x|^2)^(-(n+alpha)/2) dx by radial quadrature.

    With r = tan(phi) the radial integrand becomes sin^(n-1)(phi) cos^(alpha-1)(phi) on (0, pi/2);
    the endpoint power is handled by the algebraic weight of QUADPACK.
    """
    _check_order(alpha)
    constant = poisson_normalization(n, alpha) if normalization is None else normalization

    def smooth_part(phi: float) -> float:
        gap = math.pi / 2 - phi
        return math.sin(phi) ** (n - 1) * float(np.sinc(gap / math.pi)) ** (alpha - 1)

    radial, error = integrate.quad(smooth_part, 0.0, math.pi / 2, weight="alg", wvar=(0.0, alpha - 1), epsabs=1e-14)
    if error > 1e-10 * abs(radial):
        raise QuadratureError("radial Poisson integral did not converge", error)
    sphere = 2 * math.pi ** (n / 2) / special.gamma(n / 2)
    return float(constant * sphere * radial)


def poisson_normalization_quadrature(n: int, alpha: float) -> float:
    return 1.0 / poisson_mass(n, alpha, normalization=1.0)


def poisson_kernel(x: NDArray[np.float64], z: float, alpha: float) -> NDArray[np.float64]:
    """P_z^alpha at points x of shape (..., n)."""
    n = x.shape[-1]
    squared = np.sum(x**2, axis=-1)
    return poisson_normalization(n, alpha) * z**alpha / (z**2 + squared) ** ((n + alpha) / 2)


def _bessel_profile(s: NDArray[np.float64], alpha: float) -> NDArray[np.float64]:
    nu = alpha / 2
    positive = np.where(s > 0, s, 1.0)
    values = 2 ** (1 - nu) / special.gamma(nu) * positive**nu * special.kve(nu, positive) * np.exp(-positive)
    return np.where(s > 0, values, 1.0)


@functools.lru_cache(maxsize=65536)
def _quadrature_profile(s: float, alpha: float) -> float:
    """
    Q(s) = Gamma(nu)^-1 int exp(nu u - e^u - s^2 e^-u / 4) du with nu = alpha / 2.

    The integrand peaks at e^u = (nu + sqrt(nu^2 + s^2)) / 2; the exponent is shifted by its
    peak value and the line is split there. Beyond |u| = EXP_LIMIT the integrand is zero in
    double precision.
    """
    if s == 0:
        return 1.0
    nu = alpha / 2
    peak = math.log((nu + math.sqrt(nu**2 + s**2)) / 2)

    def exponent(u: float) -> float:
        if abs(u) > EXP_LIMIT:
            return -math.inf
        return nu * u - math.exp(u) - s**2 * math.exp(-u) / 4

    top = exponent(peak)

    def integrand(u: float) -> float:
        return math.exp(exponent(u) - top)

    left, left_error = integrate.quad(integrand, -np.inf, peak, epsabs=0.0, epsrel=1e-12, limit=400)
    right, right_error = integrate.quad(integrand, peak, np.inf, epsabs=0.0, epsrel=1e-12, limit=400)
    total, error = left + right, left_error + right_error
    if error > MULTIPLIER_TOLERANCE * total:
        raise QuadratureError(f"multiplier quadrature failed at s={s!r}, alpha={alpha!r}", error / total)
    return float(math.exp(top + math.log(total) - special.gammaln(nu)))


def extension_multiplier(
    k_mag: float | NDArray[np.float64],
    z: float | NDArray[np.float64],
    alpha: float,
    method: MultiplierMethod = MultiplierMethod.BESSEL,
) -> float | NDArray[np.float64]:
    """
    Fourier multiplier Q(k, z) = Q(1, k z) of the extension, with Q(k, 0) = Q(0, z) = 1.

    Args:
        k_mag: Wavenumber magnitude |2 pi k / L|, scalar or array
        z: Height, broadcast against k_mag
        alpha: Order in (0, 2)
        method: Closed form through K_{alpha/2} or direct quadrature of the defining integral
    """
    _check_order(alpha)
    k_arr, z_arr = np.asarray(k_mag, dtype=float), np.asarray(z, dtype=float)
    if np.any(k_arr < 0) or np.any(z_arr < 0):
        raise ValidationFailure("k_mag and z must be non-negative")
    s = k_arr * z_arr
    if MultiplierMethod(method) is MultiplierMethod.BESSEL:
        values = _bessel_profile(s, alpha)
    else:
        values = np.vectorize(lambda v: _quadrature_profile(float(v), alpha), otypes=[float])(s)
    if np.ndim(values) == 0:
        return float(values)
    return np.asarray(values)


def extend(
    theta: SpectralField,
    z_levels: NDArray[np.float64] | None = None,
    method: MultiplierMethod = MultiplierMethod.BESSEL,
) -> ExtensionField:
    """theta*(., z) = P_z^alpha * theta, evaluated mode by mode as Q(|k|, z) theta_hat(k)."""
    grid = theta.grid
    _check_order(grid.alpha)
    levels = default_ladder() if z_levels is None else np.asarray(z_levels, dtype=float)
    kappa = symbol(grid)
    values = np.empty((levels.size, *grid.shape))
    for index, z in enumerate(levels):
        multiplier = extension_multiplier(kappa, float(z), grid.alpha, method)
        values[index] = to_real(SpectralField(grid=grid, coeffs=theta.coeffs * multiplier)).samples
    return ExtensionField(grid=grid, z_levels=levels, values=values, base=to_real(theta))


def neumann_constant(alpha: float) -> float:
    """d_alpha with lim z^eps d/dz theta* = -d_alpha Lambda^alpha theta; d_1 = 1."""
    _check_order(alpha)
    return float(2 ** (1 - alpha) * special.gamma(1 - alpha / 2) / special.gamma(alpha / 2))


def _richardson(near: NDArray[np.float64], far: NDArray[np.float64], ratio: float, order: float) -> NDArray[np.float64]:
    weight = ratio**order
    return (weight * near - far) / (weight - 1)


def neumann_trace(E: ExtensionField) -> RealField:
    """
    Richardson limit of z^eps d/dz theta* as z -> 0.

    The difference quotient D(z) = alpha (theta*(z) - theta) / z^alpha has the expansion
    b + c z^(2 - alpha) + O(z^2); the three lowest ladder levels must be geometric.
    """
    alpha = E.grid.alpha
    _check_order(alpha)
    if E.z_levels.size < 3:
        raise ValidationFailure("neumann trace needs at least 3 z-levels")
    z0, z1, z2 = (float(z) for z in E.z_levels[:3])
    ratio = z1 / z0
    if abs(z2 / z1 - ratio) > LADDER_RATIO_TOLERANCE * ratio:
        raise ValidationFailure(f"lowest z-levels must be geometric, got {z0!r}, {z1!r}, {z2!r}")
    base = E.base.samples
    quotients = [alpha * (E.values[i] - base) / z**alpha for i, z in enumerate((z0, z1, z2))]
    order = 2 - alpha
    estimate = _richardson(quotients[0], quotients[1], ratio, order)
    check = _richardson(quotients[1], quotients[2], ratio, order)
    scale = float(np.max(np.abs(estimate)))
    disagreement = float(np.max(np.abs(estimate - check)))
    if scale > 0 and disagreement > EXTRAPOLATION_DISAGREEMENT * scale:
        raise ExtrapolationError(f"trace estimates disagree: {disagreement:.3e} against scale {scale:.3e}")
    logger.debug(f"neumann trace alpha={alpha} extrapolation disagreement {disagreement:.2e}")
    return RealField(grid=E.grid, samples=estimate)


@dataclasses.dataclass(frozen=True, slots=True)
class TraceRatio:
    ratio: float | None
    spread: float | None
    expected: float
    modes: int


def neumann_ratio(theta: SpectralField, trace: RealField, relative_floor: float = 1e-8) -> TraceRatio:
    """Per-mode ratio trace_hat(k) / (|k|^alpha theta_hat(k)) over the modes carried by theta."""
    alpha = theta.grid.alpha
    expected = -neumann_constant(alpha)
    kappa = symbol(theta.grid)
    magnitude = np.abs(theta.coeffs)
    carried = (kappa > 0) & (magnitude > relative_floor * float(np.max(magnitude, initial=0.0)))
    if not np.any(carried):
        return TraceRatio(ratio=None, spread=None, expected=expected, modes=0)
    trace_coeffs = to_spectral(trace).coeffs
    ratios = (trace_coeffs[carried] / (kappa[carried] ** alpha * theta.coeffs[carried])).real
    center = float(np.median(ratios))
    spread = float((np.max(ratios) - np.min(ratios)) / abs(center)) if center != 0 else float("inf")
    return TraceRatio(ratio=center, spread=spread, expected=expected, modes=int(np.count_nonzero(carried)))


def extension_energy_constant(alpha: float) -> float:
    """
    J = int_0^inf s^(1-alpha) Q(s)^2 ds = 4^(1-nu) pi nu / (2 Gamma(nu)^2 sin(pi nu)), nu = alpha/2.

    A single mode with |k| = kappa gives int z^eps |grad_x theta*|^2 = J kappa^alpha |theta_hat|^2.
    """
    _check_order(alpha)
    nu = alpha / 2
    return float(4 ** (1 - nu) * math.pi * nu / (2 * special.gamma(nu) ** 2 * math.sin(math.pi * nu)))


def extension_energy_constant_quadrature(alpha: float, method: MultiplierMethod = MultiplierMethod.BESSEL) -> float:
    _check_order(alpha)

    def integrand(s: float) -> float:
        return s ** (1 - alpha) * float(extension_multiplier(1.0, s, alpha, method)) ** 2

    head, head_error = integrate.quad(integrand, 0.0, 1.0, epsabs=1e-13, epsrel=1e-11)
    tail, tail_error = integrate.quad(integrand, 1.0, np.inf, epsabs=1e-13, epsrel=1e-11)
    if head_error + tail_error > 1e-9 * (head + tail):
        raise QuadratureError("energy constant quadrature did not converge", head_error + tail_error)
    return head + tail


@dataclasses.dataclass(frozen=True, slots=True)
class EnergyIdentity:
    lhs: float
    rhs: float
    ratio: float | None
    expected_ratio: float
    ratio_defined: bool


def weighted_energy_identity(
    H: RealField,
    z_levels: NDArray[np.float64] | None = None,
    method: MultiplierMethod = MultiplierMethod.BESSEL,
) -> EnergyIdentity:
    """
    Compare int |Lambda^(alpha/2) H|^2 with int_0^inf int z^eps |grad_x (P_z * H)|^2 dx dz.

    The z-integral is a trapezoid in log z on the ladder, with z^eps G(0) below the first level
    and an exponential tail beyond the last one, G(z) = int |grad_x P_z * H|^2 dx.
    """
    grid = H.grid
    alpha = grid.alpha
    _check_order(alpha)
    epsilon = grid.epsilon
    F = to_spectral(H)
    if abs(F.mean) > 1e-12 * max(1.0, float(np.max(np.abs(H.samples)))):
        raise ValidationFailure(f"H must have zero mean, got {F.mean!r}")
    levels = default_ladder() if z_levels is None else np.asarray(z_levels, dtype=float)
    lhs = sobolev_seminorm(F, alpha) ** 2
    expected = extension_energy_constant(alpha)
    if lhs == 0:
        return EnergyIdentity(lhs=0.0, rhs=0.0, ratio=None, expected_ratio=expected, ratio_defined=False)

    kappa = symbol(grid)
    power = np.abs(F.coeffs) ** 2
    carried = power > 0
    kappa_min = float(np.min(kappa[carried & (kappa > 0)]))
    z_max = float(levels[-1])
    if kappa_min * z_max < TAIL_DECAY_PRODUCT:
        raise UnresolvedTailError(f"lowest mode {kappa_min:.3g} has not decayed by z_max={z_max!r}")

    def gradient_energy(z: float) -> float:
        multiplier = extension_multiplier(kappa, z, alpha, method)
        return float(grid.volume * np.sum(kappa**2 * np.asarray(multiplier) ** 2 * power))

    energies = np.array([gradient_energy(float(z)) for z in levels])
    body = float(np.trapezoid(levels ** (1 + epsilon) * energies, np.log(levels)))
    below = gradient_energy(0.0) * levels[0] ** (1 + epsilon) / (1 + epsilon)
    beyond = z_max**epsilon * energies[-1] / (2 * kappa_min)
    rhs = body + below + beyond
    return EnergyIdentity(lhs=lhs, rhs=rhs, ratio=rhs / lhs, expected_ratio=expected, ratio_defined=True)


@dataclasses.dataclass(frozen=True, slots=True)
class ExtensionResidual:
    z_levels: NDArray[np.float64]
    residual: NDArray[np.float64]
    relative: NDArray[np.float64]


def _laplacian_x(samples: NDArray[np.float64], grid: GridSpec) -> NDArray[np.float64]:
    F = to_spectral(RealField(grid=grid, samples=samples))
    return to_real(SpectralField(grid=grid, coeffs=-(symbol(grid) ** 2) * F.coeffs)).samples


def extension_residual(E: ExtensionField) -> ExtensionResidual:
    """Max-norm of d_zz theta* + (eps / z) d_z theta* + Delta_x theta* at interior ladder levels."""
    z, values = E.z_levels, E.values
    if z.size < 3:
        raise ValidationFailure("extension residual needs at least 3 z-levels")
    epsilon = E.epsilon
    interior, residuals, relatives = [], [], []
    for i in range(1, z.size - 1):
        h1, h2 = z[i] - z[i - 1], z[i + 1] - z[i]
        denominator = h1 * h2 * (h1 + h2)
        second = 2 * (values[i + 1] * h1 - values[i] * (h1 + h2) + values[i - 1] * h2) / denominator
        first = (-(h2**2) * values[i - 1] + (h2**2 - h1**2) * values[i] + h1**2 * values[i + 1]) / denominator
        lateral = _laplacian_x(values[i], E.grid)
        residual = float(np.max(np.abs(second + epsilon / z[i] * first + lateral)))
        scale = float(np.max(np.abs(lateral)))
        interior.append(z[i])
        residuals.append(residual)
        relatives.append(residual / scale if scale > 0 else residual)
    return ExtensionResidual(z_levels=np.array(interior), residual=np.array(residuals), relative=np.array(relatives))


def weighted_dirichlet_energy(grid: GridSpec, heights: NDArray[np.float64], values: NDArray[np.float64]) -> float:
    """int int z^eps (|grad_x u|^2 + |d_z u|^2) dx dz over the given height stack (trapezoid in z)."""
    epsilon = grid.epsilon
    heights = np.asarray(heights, dtype=float)
    if epsilon < 0 and heights[0] == 0:
        heights, values = heights[1:], values[1:]
    if heights.size < 2:
        raise ValidationFailure("dirichlet energy needs at least 2 heights")
    kappa_sq = symbol(grid) ** 2

    def lateral_energy(level: NDArray[np.float64]) -> float:
        coeffs = to_spectral(RealField(grid=grid, samples=level)).coeffs
        return float(grid.volume * np.sum(kappa_sq * np.abs(coeffs) ** 2))

    lateral = np.array([lateral_energy(v) for v in values])
    slopes = np.gradient(values, heights, axis=0)
    vertical = np.sum(slopes**2, axis=tuple(range(1, slopes.ndim))) * grid.dx**grid.n
    weights = np.where(heights > 0, heights, 0.0) ** epsilon if epsilon != 0 else np.ones_like(heights)
    return float(np.trapezoid(weights * (lateral + vertical), heights))


@dataclasses.dataclass(frozen=True, slots=True)
class EnergyGap:
    base: float
    plus: float
    minus: float

    @property
    def gap(self) -> float:
        return min(self.plus, self.minus) - self.base

    @property
    def minimal(self) -> bool:
        return self.gap > 0


def energy_minimality_gap(E: ExtensionField, amplitude: float = 0.1, seed: int = 0, modes: int = 3) -> EnergyGap:
    """
    Energy of theta* +- amplitude * bump on the ladder slab [z_first, z_last].

    The bump vanishes on the first and last level, so both perturbations keep the boundary
    data of the slab; the extension should have the smaller energy.
    """
    z, values = E.z_levels, E.values
    if z.size < 3:
        raise ValidationFailure("energy gap needs at least 3 z-levels")
    grid = E.grid
    rng = np.random.default_rng(seed)
    k_axes = wavenumbers(grid)
    band = np.ones(grid.shape, dtype=bool)
    for k in k_axes:
        band &= np.abs(k) <= modes
    coeffs = np.where(band, rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape), 0.0)
    lateral = to_real(SpectralField(grid=grid, coeffs=coeffs)).samples
    lateral = lateral / (float(np.max(np.abs(lateral))) or 1.0)
    profile = np.sin(math.pi * (z - z[0]) / (z[-1] - z[0])) ** 2
    bump = amplitude * profile.reshape((-1,) + (1,) * grid.n) * lateral
    return EnergyGap(
        base=weighted_dirichlet_energy(grid, z, values),
        plus=weighted_dirichlet_energy(grid, z, values + bump),
        minus=weighted_dirichlet_energy(grid, z, values - bump),
    )
