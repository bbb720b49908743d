import math

import numpy as np
import pytest

from core.dto import GridSpec, RealField
from core.enums import MultiplierMethod
from core.exceptions import UnresolvedTailError, ValidationFailure
from core.extension import (
    default_ladder,
    energy_minimality_gap,
    extend,
    extension_energy_constant,
    extension_energy_constant_quadrature,
    extension_multiplier,
    extension_residual,
    neumann_constant,
    neumann_ratio,
    neumann_trace,
    poisson_kernel,
    poisson_mass,
    poisson_normalization,
    poisson_normalization_quadrature,
    weighted_energy_identity,
)
from core.spectral import coordinates, to_spectral


class TestPoissonKernel:
    @pytest.mark.parametrize(("n", "alpha"), [(1, 0.5), (2, 0.75), (2, 1.0), (3, 1.5)])
    def test_kernel_has_unit_mass(self, n: int, alpha: float) -> None:
        assert poisson_mass(n, alpha) == pytest.approx(1.0, rel=1e-9)

    def test_quadrature_normalization_matches_closed_form(self) -> None:
        assert poisson_normalization_quadrature(2, 0.6) == pytest.approx(poisson_normalization(2, 0.6), rel=1e-9)

    def test_alpha_one_is_the_classical_poisson_kernel(self) -> None:
        x = np.array([[0.0, 0.0], [1.0, 2.0]])
        expected = 1 / (2 * math.pi) * 1.0 / (1.0 + np.sum(x**2, axis=-1)) ** 1.5
        assert np.allclose(poisson_kernel(x, 1.0, 1.0), expected, rtol=1e-14)

    @pytest.mark.parametrize("alpha", [0.0, 2.0])
    def test_rejects_order(self, alpha: float) -> None:
        with pytest.raises(ValidationFailure):
            poisson_normalization(2, alpha)


class TestMultiplier:
    def test_alpha_one_is_exponential(self) -> None:
        s = np.geomspace(1e-3, 30.0, 50)
        assert np.max(np.abs(np.asarray(extension_multiplier(s, 1.0, 1.0)) - np.exp(-s))) < 1e-12

    @pytest.mark.parametrize("alpha", [0.4, 0.75, 1.3])
    def test_closed_form_agrees_with_quadrature(self, alpha: float) -> None:
        s = np.array([1e-3, 0.1, 1.0, 4.0, 12.0])
        bessel = np.asarray(extension_multiplier(s, 1.0, alpha, MultiplierMethod.BESSEL))
        quadrature = np.asarray(extension_multiplier(s, 1.0, alpha, MultiplierMethod.QUADRATURE))
        assert np.max(np.abs(bessel - quadrature) / bessel) < 1e-8

    @pytest.mark.parametrize("s", [1.0, 40.0, 200.0])
    def test_quadrature_reaches_far_into_the_tail(self, s: float) -> None:
        quadrature = extension_multiplier(s, 1.0, 0.75, MultiplierMethod.QUADRATURE)
        bessel = extension_multiplier(s, 1.0, 0.75, MultiplierMethod.BESSEL)
        assert isinstance(quadrature, float)
        assert math.isfinite(quadrature)
        assert quadrature > 0
        assert quadrature == pytest.approx(bessel, rel=1e-7)

    def test_boundary_values(self) -> None:
        assert extension_multiplier(0.0, 3.0, 0.75) == 1.0
        assert extension_multiplier(3.0, 0.0, 0.75) == 1.0

    def test_is_decreasing_in_height(self) -> None:
        values = np.asarray(extension_multiplier(2.0, np.linspace(0.0, 5.0, 40), 0.75))
        assert np.all(np.diff(values) < 0)

    def test_rejects_negative_arguments(self) -> None:
        with pytest.raises(ValidationFailure):
            extension_multiplier(-1.0, 1.0, 0.75)


def test_default_ladder_is_geometric() -> None:
    ladder = default_ladder(1e-3, 1.0, 4)
    assert np.allclose(ladder, [1e-3, 1e-2, 1e-1, 1.0], rtol=1e-12)
    with pytest.raises(ValidationFailure):
        default_ladder(1.0, 0.5, 4)


def test_extension_of_a_single_mode(shear: RealField) -> None:
    ladder = default_ladder(1e-3, 4.0, 6)
    E = extend(to_spectral(shear), ladder)
    assert E.values.shape == (6, 32, 32)
    for z, level in zip(ladder, E.values, strict=True):
        factor = float(extension_multiplier(1.0, float(z), shear.grid.alpha))
        assert np.max(np.abs(level - factor * shear.samples)) < 1e-12
    heights, stacked = E.stack(below=0.5)
    assert heights[0] == 0.0
    np.testing.assert_allclose(stacked[0], shear.samples, rtol=0, atol=1e-15)
    assert np.all(heights < 0.5)


def test_neumann_constant_is_one_at_alpha_one() -> None:
    assert neumann_constant(1.0) == pytest.approx(1.0, rel=1e-15)


@pytest.mark.parametrize("alpha", [0.6, 0.75, 0.9])
def test_neumann_trace_recovers_the_fractional_laplacian(noise: RealField, alpha: float) -> None:
    theta = to_spectral(RealField(grid=noise.grid.with_alpha(alpha), samples=noise.samples))
    trace = neumann_trace(extend(theta, default_ladder(1e-4, 4e-4, 3)))
    measured = neumann_ratio(theta, trace)
    assert measured.modes > 0
    assert measured.ratio == pytest.approx(-neumann_constant(alpha), rel=1e-3)
    assert measured.spread < 1e-3


def test_neumann_trace_needs_geometric_levels(shear: RealField) -> None:
    E = extend(to_spectral(shear), np.array([1e-4, 2e-4, 5e-4]))
    with pytest.raises(ValidationFailure):
        neumann_trace(E)


def test_neumann_ratio_of_a_constant_has_no_modes(grid: GridSpec) -> None:
    constant = RealField(grid=grid, samples=np.ones(grid.shape))
    result = neumann_ratio(to_spectral(constant), constant)
    assert result.modes == 0
    assert result.ratio is None


@pytest.mark.parametrize("alpha", [0.5, 0.75, 1.0, 1.5])
def test_energy_constant_closed_form_matches_quadrature(alpha: float) -> None:
    assert extension_energy_constant_quadrature(alpha) == pytest.approx(extension_energy_constant(alpha), rel=1e-8)


def test_energy_constant_at_alpha_one() -> None:
    # int_0^inf exp(-2s) ds
    assert extension_energy_constant(1.0) == pytest.approx(0.5, rel=1e-14)


class TestWeightedEnergyIdentity:
    def test_ratio_matches_the_energy_constant(self, noise: RealField) -> None:
        identity = weighted_energy_identity(noise)
        assert identity.ratio_defined
        assert identity.ratio == pytest.approx(identity.expected_ratio, rel=1e-3)

    def test_zero_field_has_no_ratio(self, grid: GridSpec) -> None:
        identity = weighted_energy_identity(RealField(grid=grid, samples=np.zeros(grid.shape)))
        assert not identity.ratio_defined
        assert identity.ratio is None

    def test_rejects_nonzero_mean(self, shear: RealField) -> None:
        with pytest.raises(ValidationFailure):
            weighted_energy_identity(RealField(grid=shear.grid, samples=shear.samples + 1.0))

    def test_short_ladder_leaves_the_tail_unresolved(self, shear: RealField) -> None:
        with pytest.raises(UnresolvedTailError):
            weighted_energy_identity(shear, default_ladder(1e-4, 2.0, 30))


def test_extension_residual_is_small_for_the_harmonic_case() -> None:
    grid = GridSpec(n=2, N=32, alpha=1.0)
    field = RealField(grid=grid, samples=np.sin(coordinates(grid)[0]))
    residual = extension_residual(extend(to_spectral(field), default_ladder(1e-3, 2.0, 200)))
    assert residual.z_levels.size == 198
    assert np.max(residual.relative) < 5e-3


def test_extension_minimizes_the_weighted_energy(shear: RealField) -> None:
    gap = energy_minimality_gap(extend(to_spectral(shear)))
    assert gap.minimal
    assert gap.gap > 0


def test_quadrature_extension_matches_the_closed_form(noise: RealField) -> None:
    ladder = default_ladder(1e-3, 4.0, 6)
    theta = to_spectral(noise)
    quadrature = extend(theta, ladder, MultiplierMethod.QUADRATURE)
    bessel = extend(theta, ladder, MultiplierMethod.BESSEL)
    np.testing.assert_allclose(quadrature.values, bessel.values, rtol=0, atol=1e-9)


def test_perturbations_raise_the_mean_energy_of_a_random_field(noise: RealField) -> None:
    gap = energy_minimality_gap(extend(to_spectral(noise), default_ladder(1e-3, 4.0, 24)))
    assert gap.plus + gap.minus > 2 * gap.base
