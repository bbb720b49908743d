import functools
from typing import Any

import numpy as np
from numpy.typing import NDArray
from scipy import fft

from core.dto import FieldNorms, GridSpec, RealField, SpectralField
from core.exceptions import FieldMismatchError, ValidationFailure


def _read_only(array: NDArray[Any]) -> NDArray[Any]:
    array.setflags(write=False)
    return array


@functools.lru_cache(maxsize=64)
def wavenumbers(grid: GridSpec) -> tuple[NDArray[np.float64], ...]:
    """Integer wavevector components k_j in [-N/2, N/2), one broadcastable array per axis."""
    axis = fft.fftfreq(grid.N, d=1.0 / grid.N)
    return tuple(_read_only(mesh) for mesh in np.meshgrid(*([axis] * grid.n), indexing="ij"))


@functools.lru_cache(maxsize=64)
def symbol(grid: GridSpec) -> NDArray[np.float64]:
    """|2 pi k / L| per wavevector."""
    squared = sum(k**2 for k in wavenumbers(grid))
    return _read_only((2 * np.pi / grid.L) * np.sqrt(squared))


@functools.lru_cache(maxsize=64)
def coordinates(grid: GridSpec) -> tuple[NDArray[np.float64], ...]:
    axis = np.arange(grid.N) * grid.dx
    return tuple(_read_only(mesh) for mesh in np.meshgrid(*([axis] * grid.n), indexing="ij"))


@functools.lru_cache(maxsize=64)
def nyquist_mask(grid: GridSpec) -> NDArray[np.bool_]:
    """True on modes where some k_j sits on the unpaired -N/2 line."""
    mask = np.zeros(grid.shape, dtype=bool)
    for k in wavenumbers(grid):
        mask |= k == -grid.N // 2
    return _read_only(mask)


@functools.lru_cache(maxsize=64)
def dealias_mask(grid: GridSpec) -> NDArray[np.bool_]:
    mask = np.ones(grid.shape, dtype=bool)
    for k in wavenumbers(grid):
        mask &= 3 * np.abs(k) <= grid.N
    return _read_only(mask)


def ensure_same_grid(expected: GridSpec, actual: GridSpec) -> None:
    if expected != actual:
        raise FieldMismatchError(f"grid mismatch: {expected} vs {actual}")


def to_spectral(f: RealField) -> SpectralField:
    coeffs = fft.fftn(f.samples) / f.grid.size
    return SpectralField(grid=f.grid, coeffs=coeffs)


def to_real(F: SpectralField) -> RealField:
    samples = fft.ifftn(F.coeffs * F.grid.size).real
    return RealField(grid=F.grid, samples=samples)


def frac_laplacian(F: SpectralField, beta: float) -> SpectralField:
    """Lambda^beta, i.e. multiplication by |2 pi k / L|^beta; the zero mode is annihilated."""
    if not 0 < beta <= 2:
        raise ValidationFailure(f"beta must be in (0, 2], got {beta}")
    return SpectralField(grid=F.grid, coeffs=F.coeffs * symbol(F.grid) ** beta)


def riesz_velocity(theta: SpectralField) -> tuple[SpectralField, SpectralField]:
    """
    u = (-R_2 theta, R_1 theta) with R_j of symbol -i k_j / |k|.

    Written out: u1 = i k2/|k| theta, u2 = -i k1/|k| theta, so theta = sin(x1) gives u = (0, -cos(x1)).
    """
    grid = theta.grid
    if grid.n != 2:
        raise ValidationFailure(f"riesz velocity needs n = 2, got n = {grid.n}")
    k1, k2 = wavenumbers(grid)
    magnitude = np.sqrt(k1**2 + k2**2)
    inverse = np.divide(1.0, magnitude, out=np.zeros_like(magnitude), where=magnitude > 0)
    inverse[nyquist_mask(grid)] = 0.0
    u1 = 1j * k2 * inverse * theta.coeffs
    u2 = -1j * k1 * inverse * theta.coeffs
    return SpectralField(grid=grid, coeffs=u1), SpectralField(grid=grid, coeffs=u2)


def dealias(F: SpectralField) -> SpectralField:
    """Two-thirds rule: keep modes with 3|k_j| <= N on every axis."""
    return SpectralField(grid=F.grid, coeffs=np.where(dealias_mask(F.grid), F.coeffs, 0.0))


def gradient(F: SpectralField) -> tuple[SpectralField, ...]:
    grid = F.grid
    scale = 2 * np.pi / grid.L
    components = []
    for k in wavenumbers(grid):
        multiplier = np.where(k == -grid.N // 2, 0.0, 1j * scale * k)
        components.append(SpectralField(grid=grid, coeffs=multiplier * F.coeffs))
    return tuple(components)


def l2_norm(f: RealField) -> float:
    return float(np.sqrt(f.grid.dx**f.grid.n * np.sum(f.samples**2)))


def sup_norm(f: RealField) -> float:
    return float(np.max(np.abs(f.samples)))


def sobolev_seminorm(F: SpectralField, beta: float) -> float:
    """Parseval form of ||Lambda^(beta/2) f||_2 on the torus."""
    weights = symbol(F.grid) ** beta
    return float(np.sqrt(F.grid.volume * np.sum(weights * np.abs(F.coeffs) ** 2)))


def norms(f: RealField | SpectralField, alpha: float | None = None) -> FieldNorms:
    """
    L2, sup and H^(alpha/2) seminorm of a field.

    Args:
        f: Field in physical or spectral representation
        alpha: Order of the seminorm, defaults to the grid alpha
    """
    if isinstance(f, SpectralField):
        F, real = f, to_real(f)
    else:
        F, real = to_spectral(f), f
    order = f.grid.alpha if alpha is None else alpha
    if not 0 < order <= 2:
        raise ValidationFailure(f"alpha must be in (0, 2], got {order}")
    h_alpha_half = l2_norm(to_real(frac_laplacian(F, order / 2)))
    return FieldNorms(l2=l2_norm(real), sup=sup_norm(real), h_alpha_half=h_alpha_half)
