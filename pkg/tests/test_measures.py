import numpy as np
import pytest

from core.exceptions import FieldMismatchError, ValidationFailure
from core.measures import (
    S_CAP,
    axis_offsets,
    build_cells,
    clamp_s,
    cylinder_measure,
    dual_cell_edges,
    graded_weights,
    k_plus,
    monte_carlo_measure,
    select_axis,
    weighted_measure,
)


def test_dual_cell_edges_are_midpoints_closed_by_the_box() -> None:
    edges = dual_cell_edges(np.array([0.0, 1.0, 2.0]), -0.5, 2.5)
    assert np.array_equal(edges, [-0.5, 0.5, 1.5, 2.5])


def test_dual_cell_edges_need_increasing_nodes() -> None:
    with pytest.raises(ValidationFailure):
        dual_cell_edges(np.array([0.0, 0.0, 1.0]), 0.0, 1.0)


def test_graded_weights_integrate_the_power_exactly() -> None:
    assert graded_weights(np.array([0.0, 1.0]), 0.0)[0] == pytest.approx(1.0)
    assert graded_weights(np.array([0.0, 1.0]), 0.5)[0] == pytest.approx(1 / 1.5)
    weights = graded_weights(np.linspace(0.0, 2.0, 7), 0.25)
    assert np.sum(weights) == pytest.approx(2.0**1.25 / 1.25, rel=1e-14)


def test_cells_tile_the_cylinder() -> None:
    r, alpha = 1.0, 0.5
    cells = build_cells(
        times=[0.5, 1.0],
        heights=[0.0, 0.5, 0.9],
        offsets=[np.array([-1.0, 0.0, 1.0])] * 2,
        epsilon=1 - alpha,
        t_bounds=(1 - r**alpha, 1.0),
        z_upper=r,
        half_width=r,
    )
    assert cells.shape == (2, 3, 3, 3)
    assert cells.total == pytest.approx(cylinder_measure(r, 2, alpha), rel=1e-14)
    assert weighted_measure(np.ones(cells.shape, dtype=bool), cells) == pytest.approx(cells.total)
    assert weighted_measure(np.zeros(cells.shape, dtype=bool), cells) == 0.0
    with pytest.raises(FieldMismatchError):
        weighted_measure(np.ones((2, 3)), cells)


def test_cylinder_measure_and_k_plus() -> None:
    measure = cylinder_measure(4.0, 2, 0.5)
    assert measure == pytest.approx(2048 / 3, rel=1e-14)
    assert k_plus(0.01, measure) == 68950
    assert k_plus(1.0, measure) == 1366
    with pytest.raises(ValidationFailure):
        k_plus(0.0, measure)
    with pytest.raises(ValidationFailure):
        cylinder_measure(0.0, 2, 0.5)


class TestMonteCarloMeasure:
    def test_full_cylinder(self) -> None:
        estimate = monte_carlo_measure(lambda x, z, t: np.ones(z.shape, dtype=bool), 2.0, 2, 0.5, 4.0, samples=1000)
        assert estimate == pytest.approx(cylinder_measure(2.0, 2, 0.5), rel=1e-14)

    def test_lower_half_in_height(self) -> None:
        estimate = monte_carlo_measure(lambda x, z, t: z < 0.5, 1.0, 2, 0.5, 1.0, samples=200_000, seed=7)
        assert estimate == pytest.approx(0.5**1.5 * cylinder_measure(1.0, 2, 0.5), rel=0.02)

    def test_samples_stay_inside_the_window(self) -> None:
        def inside(x: np.ndarray, z: np.ndarray, t: np.ndarray) -> np.ndarray:
            assert np.all(np.abs(x) <= 1.0)
            assert np.all((z >= 0) & (z < 1.0))
            assert np.all((t > 0.0) & (t <= 1.0))
            return np.ones(z.shape, dtype=bool)

        monte_carlo_measure(inside, 1.0, 1, 0.75, 1.0, samples=500)


def test_clamp_s() -> None:
    assert clamp_s(0.5) == S_CAP
    assert clamp_s(0.001) == 0.001


def test_axis_offsets_wrap_around_the_period() -> None:
    offsets = axis_offsets(np.arange(8.0), 0.0, 8.0)
    assert np.array_equal(offsets, [0, 1, 2, 3, -4, -3, -2, -1])


def test_select_axis_sorts_by_offset() -> None:
    indices, offsets = select_axis(np.arange(8.0), 0.0, 8.0, 2.0, 1e-9)
    assert indices.tolist() == [6, 7, 0, 1, 2]
    assert offsets.tolist() == [-2, -1, 0, 1, 2]
    with pytest.raises(FieldMismatchError):
        select_axis(np.arange(8.0), 0.0, 8.0, 5.0, 1e-9)
