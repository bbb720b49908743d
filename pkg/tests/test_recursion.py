import pytest

from core.enums import RecursionOutcome
from core.exceptions import ValidationFailure
from core.recursion import (
    RecursionSpec,
    classify,
    degiorgi_recursion,
    recursion_threshold,
    threshold_closed_form,
)


class TestRecursionSpec:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"C": 0.0, "beta": 2.0, "seed": (0.1, 0.1, 0.1)},
            {"C": 2.0, "beta": 1.0, "seed": (0.1, 0.1, 0.1)},
            {"C": 2.0, "beta": 2.0, "seed": (0.1, -0.1, 0.1)},
            {"C": 2.0, "beta": 2.0, "seed": (0.1, 0.1)},
            {"C": 2.0, "beta": 2.0, "seed": (0.1, 0.1, 0.1), "k_max": 2},
        ],
    )
    def test_rejects_invalid_parameters(self, kwargs: dict) -> None:
        with pytest.raises(ValidationFailure):
            RecursionSpec(**kwargs)


class TestClassify:
    def test_zero_seed_converges(self) -> None:
        result = classify(RecursionSpec(C=2.0, beta=2.0, seed=(0.0, 0.0, 0.0)))
        assert result.converges
        assert result.steps == 2

    def test_small_seed_converges(self) -> None:
        assert classify(RecursionSpec(C=2.0, beta=2.0, seed=(1e-20, 1e-20, 1e-20))).converges

    def test_large_seed_diverges_at_once(self) -> None:
        result = classify(RecursionSpec(C=2.0, beta=2.0, seed=(10.0, 10.0, 10.0)))
        assert result.outcome is RecursionOutcome.DIVERGES
        assert result.steps == 0

    def test_fixed_point_is_unclassified(self) -> None:
        result = classify(RecursionSpec(C=1.0, beta=2.0, seed=(1.0, 1.0, 1.0), k_max=50))
        assert result.outcome is RecursionOutcome.UNCLASSIFIED
        assert result.steps == 50


class TestThreshold:
    def test_closed_form(self) -> None:
        assert threshold_closed_form(1.0, 2.0) == 1.0
        # x = 3/4: 3x/(1-x)^2 = 36 and 2x/(1-x) = 6
        assert threshold_closed_form(2.0, 4 / 3) == pytest.approx(2.0**-42, rel=1e-12)
        assert threshold_closed_form(0.5, 2.0) == pytest.approx(64.0, rel=1e-12)

    @pytest.mark.parametrize(("C", "beta"), [(2.0, 4 / 3), (2.0, 2.0), (0.5, 2.0), (10.0, 1.5)])
    def test_bisection_matches_the_closed_form(self, C: float, beta: float) -> None:
        assert recursion_threshold(C, beta) == pytest.approx(threshold_closed_form(C, beta), rel=1e-5)

    def test_seeds_on_either_side_of_the_threshold(self) -> None:
        threshold = threshold_closed_form(2.0, 2.0)
        below = classify(RecursionSpec(C=2.0, beta=2.0, seed=(0.99 * threshold,) * 3))
        above = classify(RecursionSpec(C=2.0, beta=2.0, seed=(1.01 * threshold,) * 3))
        assert below.outcome is RecursionOutcome.CONVERGES
        assert above.outcome is RecursionOutcome.DIVERGES

    def test_boundary_case_returns_one(self) -> None:
        assert recursion_threshold(1.0, 2.0) == 1.0


def test_degiorgi_recursion_attaches_the_threshold() -> None:
    result = degiorgi_recursion(RecursionSpec(C=2.0, beta=2.0, seed=(1e-3, 1e-3, 1e-3)))
    assert result.converges
    assert result.threshold_epsilon0 == pytest.approx(2.0**-8, rel=1e-5)
