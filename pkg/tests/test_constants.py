import math

import pytest

from core.constants import (
    BARRIER_WINDOW,
    HOLDER_WINDOW,
    MODIFIED_WINDOW,
    SHRINK,
    SHRINK_BOUND,
    a_supremum,
    admissible_c0,
    chain_check,
    derive,
    eta_from_lambda,
    is_finite_ledger,
    sweep,
)
from core.exceptions import ValidationFailure
from core.recursion import threshold_closed_form


class TestAdmissibleWindow:
    def test_window_at_three_quarters(self) -> None:
        window = admissible_c0(0.75)
        assert window.bounds[BARRIER_WINDOW] == pytest.approx(0.125)
        assert window.bounds[HOLDER_WINDOW] == pytest.approx(2 ** (-5 / 3))
        assert window.binding == HOLDER_WINDOW
        assert window.lower == window.bounds[HOLDER_WINDOW]
        assert window.upper == 1.0
        assert not window.empty
        assert window.contains(0.6)
        assert not window.contains(0.3)

    def test_small_alpha_bound(self) -> None:
        window = admissible_c0(0.75, alpha0=0.4)
        assert window.bounds[MODIFIED_WINDOW] == pytest.approx(2**-2.5)
        assert window.binding == HOLDER_WINDOW

    def test_shrink_bound_closes_the_window_near_one(self) -> None:
        window = admissible_c0(0.999)
        assert not window.empty
        assert window.bounds[SHRINK] > 1
        assert window.combined_empty

    @pytest.mark.parametrize("alpha", [0.0, 1.0])
    def test_rejects_alpha(self, alpha: float) -> None:
        with pytest.raises(ValidationFailure):
            admissible_c0(alpha)


class TestDerive:
    def test_reference_values(self) -> None:
        ledger = derive(0.75, 0.6)
        assert ledger.r0 == 0.00234375
        assert ledger.epsilon == pytest.approx(0.25)
        assert ledger.a == pytest.approx(0.99 * a_supremum(0.75))
        assert ledger.C1 == pytest.approx(64 / 0.6)
        assert ledger.lambda_ == pytest.approx(1 - 0.6**0.75)
        assert ledger.lambda_source == "heuristic"
        assert ledger.K_plus == math.ceil(101 * ledger.Q4_measure)
        assert ledger.eta == pytest.approx(ledger.lambda_starstar / 2)
        # 2^-K_plus underflows, so lambda** collapses onto lambda
        assert ledger.lambda_starstar == pytest.approx(ledger.lambda_)
        assert is_finite_ledger(ledger)

    def test_c1_at_four_fifths(self) -> None:
        assert derive(0.75, 0.8).C1 == pytest.approx(80.0)

    def test_negative_a_factor_leaves_recursion_empty(self) -> None:
        ledger = derive(0.75, 0.6)
        assert ledger.A_exact < 0
        assert ledger.recursion_C is None
        assert ledger.M is None
        assert ledger.epsilon0 is None

    def test_small_alpha_variant_feeds_the_recursion(self) -> None:
        ledger = derive(0.75, 0.6, alpha0=0.4)
        assert ledger.A_lower is not None and ledger.A_lower > 0
        assert ledger.B_upper == pytest.approx(2**42.5)
        assert ledger.recursion_beta == pytest.approx(2 / 1.625)
        assert ledger.recursion_C is not None and ledger.recursion_C > 1
        expected = threshold_closed_form(ledger.recursion_C, ledger.recursion_beta)
        assert ledger.epsilon0 == pytest.approx(expected, rel=1e-4)

    def test_barrier_lambda(self) -> None:
        ledger = derive(0.75, 0.6, barrier=True, with_epsilon0=False)
        assert ledger.lambda_source == "barrier"
        assert 0 < ledger.lambda_ < 1

    def test_rejects_c0_outside_the_window(self) -> None:
        with pytest.raises(ValidationFailure):
            derive(0.75, 0.2)

    def test_rejects_large_a(self) -> None:
        with pytest.raises(ValidationFailure):
            derive(0.75, 0.6, a=2.0)


class TestChainCheck:
    def test_shrink_bound_holds_at_the_reference_point(self) -> None:
        check = chain_check(derive(0.75, 0.6))
        assert check.verdicts[SHRINK_BOUND].holds
        assert SHRINK_BOUND not in check.failing

    def test_zero_slack_fails(self) -> None:
        # r0 = 0.5 / 256 and c0^2 a / 128 = 0.25 / 128 coincide
        check = chain_check(derive(0.75, 0.5, a=1.0))
        assert check.verdicts[SHRINK_BOUND].slack == 0.0
        assert not check.passed
        assert SHRINK_BOUND in check.failing


def test_eta_from_lambda() -> None:
    bracket = eta_from_lambda(0.5, 0.3)
    assert bracket.eta == 0.25
    assert bracket.bracket == (0.15, 0.3)
    assert eta_from_lambda(0.5).bracket is None
    with pytest.raises(ValidationFailure):
        eta_from_lambda(1.5)


def test_sweep_uses_the_window_midpoint() -> None:
    rows = sweep([0.5, 0.75], with_epsilon0=False)
    assert [row.alpha for row in rows] == [0.5, 0.75]
    for row in rows:
        assert row.ledger is not None and row.check is not None
        assert row.ledger.c0 == pytest.approx(row.window.midpoint)
