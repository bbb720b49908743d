import math

import numpy as np
import pytest

from core.dto import GridSpec, InitialConditionSpec, RealField, SpectralField
from core.enums import InitialConditionPreset
from core.exceptions import FieldMismatchError, ValidationFailure
from core.initial_conditions import make_initial_condition
from core.spectral import (
    coordinates,
    dealias,
    ensure_same_grid,
    frac_laplacian,
    gradient,
    l2_norm,
    norms,
    riesz_velocity,
    sobolev_seminorm,
    sup_norm,
    to_real,
    to_spectral,
)


class TestGridSpec:
    @pytest.mark.parametrize("N", [4, 12, 100])
    def test_rejects_bad_node_counts(self, N: int) -> None:
        with pytest.raises(ValidationFailure):
            GridSpec(n=2, N=N)

    @pytest.mark.parametrize("alpha", [0.0, -0.5, 2.5])
    def test_rejects_alpha_outside_range(self, alpha: float) -> None:
        with pytest.raises(ValidationFailure):
            GridSpec(alpha=alpha)

    def test_derived_quantities(self) -> None:
        grid = GridSpec(n=3, N=16, L=8.0, alpha=0.5)
        assert grid.dx == 0.5
        assert grid.shape == (16, 16, 16)
        assert grid.volume == 512.0
        assert grid.epsilon == 0.5


class TestFields:
    def test_shape_mismatch_raises(self, grid: GridSpec) -> None:
        with pytest.raises(FieldMismatchError):
            RealField(grid=grid, samples=np.zeros((16, 16)))

    def test_non_finite_samples_raise(self, grid: GridSpec) -> None:
        samples = np.zeros(grid.shape)
        samples[3, 4] = np.nan
        with pytest.raises(ValidationFailure):
            RealField(grid=grid, samples=samples)

    def test_samples_are_read_only(self, noise: RealField) -> None:
        with pytest.raises(ValueError):
            noise.samples[0, 0] = 1.0


def test_constant_field_has_its_value_in_the_zero_mode(grid: GridSpec) -> None:
    F = to_spectral(RealField(grid=grid, samples=np.full(grid.shape, 2.5)))
    assert F.coeffs[0, 0] == pytest.approx(2.5)
    assert F.mean == pytest.approx(2.5)
    assert np.max(np.abs(F.coeffs.ravel()[1:])) < 1e-14


def test_transform_pair_recovers_samples(noise: RealField) -> None:
    back = to_real(to_spectral(noise))
    assert np.max(np.abs(back.samples - noise.samples)) < 1e-12


def test_frac_laplacian_scales_a_single_mode(grid: GridSpec) -> None:
    x1 = coordinates(grid)[0]
    field = RealField(grid=grid, samples=np.cos(3 * x1))
    result = to_real(frac_laplacian(to_spectral(field), 0.6))
    assert np.max(np.abs(result.samples - 3**0.6 * np.cos(3 * x1))) < 1e-12


def test_frac_laplacian_annihilates_constants(grid: GridSpec) -> None:
    F = to_spectral(RealField(grid=grid, samples=np.ones(grid.shape)))
    assert np.max(np.abs(frac_laplacian(F, 1.0).coeffs)) == 0.0


@pytest.mark.parametrize("beta", [0.0, 2.5])
def test_frac_laplacian_rejects_order(noise: RealField, beta: float) -> None:
    with pytest.raises(ValidationFailure):
        frac_laplacian(to_spectral(noise), beta)


def test_riesz_velocity_of_a_shear(shear: RealField) -> None:
    u1, u2 = riesz_velocity(to_spectral(shear))
    x1 = coordinates(shear.grid)[0]
    assert np.max(np.abs(to_real(u1).samples)) < 1e-12
    assert np.max(np.abs(to_real(u2).samples + np.cos(x1))) < 1e-12


def test_riesz_velocity_is_divergence_free(noise: RealField) -> None:
    u1, u2 = riesz_velocity(to_spectral(noise))
    divergence = gradient(u1)[0].coeffs + gradient(u2)[1].coeffs
    assert np.max(np.abs(divergence)) < 1e-12


def test_riesz_velocity_needs_two_dimensions() -> None:
    grid = GridSpec(n=1, N=32)
    with pytest.raises(ValidationFailure):
        riesz_velocity(SpectralField(grid=grid, coeffs=np.zeros(grid.shape)))


def test_dealias_keeps_only_the_inner_two_thirds(grid: GridSpec) -> None:
    ones = SpectralField(grid=grid, coeffs=np.ones(grid.shape))
    kept = np.count_nonzero(dealias(ones).coeffs)
    # |k_j| <= 10 on each axis for N = 32
    assert kept == 21**2


def test_gradient_of_sine(shear: RealField) -> None:
    d1, d2 = gradient(to_spectral(shear))
    x1 = coordinates(shear.grid)[0]
    assert np.max(np.abs(to_real(d1).samples - np.cos(x1))) < 1e-12
    assert np.max(np.abs(to_real(d2).samples)) < 1e-12


def test_norms_of_a_shear(shear: RealField) -> None:
    result = norms(shear)
    assert result.l2 == pytest.approx(math.pi * math.sqrt(2), rel=1e-12)
    assert result.sup == pytest.approx(1.0, abs=1e-12)
    # |k| = 1 so every fractional order leaves the mode unchanged
    assert result.h_alpha_half == pytest.approx(result.l2, rel=1e-12)
    assert sobolev_seminorm(to_spectral(shear), 0.75) == pytest.approx(result.l2, rel=1e-12)


def test_l2_and_sup_of_constant(grid: GridSpec) -> None:
    field = RealField(grid=grid, samples=np.full(grid.shape, -2.0))
    assert l2_norm(field) == pytest.approx(2 * 2 * math.pi, rel=1e-12)
    assert sup_norm(field) == 2.0


def test_ensure_same_grid_detects_mismatch(grid: GridSpec) -> None:
    with pytest.raises(FieldMismatchError):
        ensure_same_grid(grid, grid.with_alpha(0.5))


class TestFracLaplacianAlgebra:
    @pytest.mark.parametrize(("a", "b"), [(0.3, 0.5), (0.75, 0.75), (0.4, 1.6)])
    def test_orders_add(self, noise: RealField, a: float, b: float) -> None:
        F = to_spectral(noise)
        composed = frac_laplacian(frac_laplacian(F, a), b).coeffs
        direct = frac_laplacian(F, a + b).coeffs
        np.testing.assert_allclose(composed, direct, rtol=1e-12, atol=1e-14)

    @pytest.mark.parametrize("shift", [(1, 0), (5, 11), (0, 31)])
    def test_commutes_with_translations(self, noise: RealField, shift: tuple[int, int]) -> None:
        moved = RealField(grid=noise.grid, samples=np.roll(noise.samples, shift, axis=(0, 1)))
        applied_after = to_real(frac_laplacian(to_spectral(moved), 0.75)).samples
        applied_before = np.roll(to_real(frac_laplacian(to_spectral(noise), 0.75)).samples, shift, axis=(0, 1))
        np.testing.assert_allclose(applied_after, applied_before, atol=1e-12)


class TestRieszCorpus:
    def test_hundred_random_fields_are_divergence_free(self, grid: GridSpec) -> None:
        spec = InitialConditionSpec(name=InitialConditionPreset.RANDOM_HK, params={"k_min": 1.0, "k_max": 10.0})
        worst = 0.0
        for seed in range(100):
            u1, u2 = riesz_velocity(to_spectral(make_initial_condition(spec, grid, seed)))
            divergence = to_real(SpectralField(grid=grid, coeffs=gradient(u1)[0].coeffs + gradient(u2)[1].coeffs))
            worst = max(worst, float(np.max(np.abs(divergence.samples))))
        assert worst < 1e-10
