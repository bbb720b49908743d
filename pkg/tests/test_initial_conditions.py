import numpy as np
import pytest

from core.dto import GridSpec, InitialConditionSpec
from core.enums import InitialConditionPreset
from core.exceptions import ValidationFailure
from core.initial_conditions import PRESETS, PowerProfile, RandomBandLimited, RoughSigns, make_initial_condition
from core.spectral import symbol, to_spectral


def test_every_preset_is_registered() -> None:
    assert set(PRESETS) == set(InitialConditionPreset)


@pytest.mark.parametrize("preset", list(InitialConditionPreset))
def test_presets_are_reproducible(grid: GridSpec, preset: InitialConditionPreset) -> None:
    spec = InitialConditionSpec(name=preset)
    first = make_initial_condition(spec, grid, seed=11)
    second = make_initial_condition(spec, grid, seed=11)
    assert np.array_equal(first.samples, second.samples)


def test_random_band_limited_stays_in_band(grid: GridSpec) -> None:
    field = RandomBandLimited(grid, {"k_min": 2.0, "k_max": 5.0, "amplitude": 0.5}, seed=4).build()
    coeffs = to_spectral(field).coeffs
    k = symbol(grid)
    outside = (k < 2.0 - 1e-9) | (k > 5.0 + 1e-9)
    assert np.max(np.abs(coeffs[outside])) < 1e-14
    assert abs(field.mean) < 1e-14
    assert np.sqrt(np.mean(field.samples**2)) == pytest.approx(0.5, rel=1e-12)


def test_random_band_limited_depends_on_seed(grid: GridSpec) -> None:
    first = RandomBandLimited(grid, seed=1).build()
    second = RandomBandLimited(grid, seed=2).build()
    assert not np.array_equal(first.samples, second.samples)


def test_unknown_parameter_is_rejected(grid: GridSpec) -> None:
    with pytest.raises(ValidationFailure, match="k_mx"):
        RandomBandLimited(grid, {"k_mx": 4.0})


def test_band_beyond_nyquist_is_rejected(grid: GridSpec) -> None:
    with pytest.raises(ValidationFailure):
        RandomBandLimited(grid, {"k_max": 20.0}).build()


def test_rough_signs_are_bounded_and_blocky(grid: GridSpec) -> None:
    field = RoughSigns(grid, {"cells": 4.0, "amplitude": 2.0}, seed=5).build()
    assert set(np.unique(field.samples)) <= {-2.0, 2.0}
    assert np.all(field.samples[:8, :8] == field.samples[0, 0])


def test_rough_signs_need_dividing_cells(grid: GridSpec) -> None:
    with pytest.raises(ValidationFailure):
        RoughSigns(grid, {"cells": 5.0}).build()


def test_power_profile_is_symmetric_about_the_origin() -> None:
    grid = GridSpec(n=1, N=64, L=8.0)
    samples = PowerProfile(grid, {"gamma": 0.5}).build().samples
    assert samples[0] == 0.0
    assert samples[1] == pytest.approx(samples[-1], rel=1e-14)
    assert samples[32] == pytest.approx(2.0, rel=1e-14)


def test_shear_is_a_single_mode(grid: GridSpec) -> None:
    spec = InitialConditionSpec(name=InitialConditionPreset.SHEAR, params={"mode": 2.0})
    coeffs = to_spectral(make_initial_condition(spec, grid)).coeffs
    assert np.count_nonzero(np.abs(coeffs) > 1e-12) == 2
