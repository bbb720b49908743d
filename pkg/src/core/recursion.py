"""
The nonlinear recursion A_k = C^k A_{k-3}^beta behind the De Giorgi iteration.

Iterates are tracked as logarithms, l_k = k ln C + beta l_{k-3}, so seeds far below one and
sequences far above one stay representable.
"""

import dataclasses
import logging
import math

from core.enums import RecursionOutcome
from core.exceptions import ValidationFailure

logger = logging.getLogger(__name__)

DEFAULT_K_MAX = 600
BISECTION_TOLERANCE = 1e-6
BRACKET_STEPS = 2000


@dataclasses.dataclass(frozen=True)
class RecursionSpec:
    C: float
    beta: float
    seed: tuple[float, float, float]
    k_max: int = DEFAULT_K_MAX

    def __post_init__(self) -> None:
        if not self.C > 0:
            raise ValidationFailure(f"C must be positive, got {self.C}")
        if not self.beta > 1:
            raise ValidationFailure(f"beta must exceed 1, got {self.beta}")
        if len(self.seed) != 3 or any(not value >= 0 for value in self.seed):
            raise ValidationFailure(f"seed must be three non-negative numbers, got {self.seed}")
        if self.k_max < 3:
            raise ValidationFailure(f"k_max must be at least 3, got {self.k_max}")


@dataclasses.dataclass(frozen=True)
class RecursionResult:
    outcome: RecursionOutcome
    steps: int
    threshold_epsilon0: float | None = None

    @property
    def converges(self) -> bool:
        return self.outcome is RecursionOutcome.CONVERGES


def _trapped(log_value: float, k: int, beta: float, drift: float) -> bool:
    """
    Whether |l_k| is large enough that l_{k+3}, l_{k+6}, ... keep moving away from zero.

    With drift = max(+-ln C, 0) against the direction of motion, the margin
    (beta - 1)|l_k| - (k + 3) drift >= 3 drift / (beta - 1) reproduces itself three steps later.
    """
    margin = (beta - 1) * abs(log_value) - (k + 3) * drift
    return margin >= 3 * drift / (beta - 1) and margin > 0 or math.isinf(log_value)


def classify(spec: RecursionSpec) -> RecursionResult:
    """
    Converges once three consecutive iterates are trapped below one, diverges as soon as one
    iterate is trapped above one; otherwise the run is unclassified after k_max steps.
    """
    log_c = math.log(spec.C)
    logs = [math.log(value) if value > 0 else -math.inf for value in spec.seed]
    below_run = 0
    for k in range(spec.k_max + 1):
        if k >= 3:
            logs.append(k * log_c + spec.beta * logs[k - 3])
        value = logs[k]
        if value > 0 and _trapped(value, k, spec.beta, max(-log_c, 0.0)):
            return RecursionResult(RecursionOutcome.DIVERGES, k)
        below_run = below_run + 1 if value < 0 and _trapped(value, k, spec.beta, max(log_c, 0.0)) else 0
        if below_run == 3:
            return RecursionResult(RecursionOutcome.CONVERGES, k)
    return RecursionResult(RecursionOutcome.UNCLASSIFIED, spec.k_max)


def _outcome(C: float, beta: float, magnitude: float, k_max: int) -> RecursionOutcome:
    return classify(RecursionSpec(C=C, beta=beta, seed=(magnitude,) * 3, k_max=k_max)).outcome


def recursion_threshold(
    C: float, beta: float, k_max: int = DEFAULT_K_MAX, tolerance: float = BISECTION_TOLERANCE
) -> float:
    """
    Largest seed magnitude s with (s, s, s) converging, found by geometric bisection.

    The bracket is grown by factors of two from s = 1 and then halved in log scale until
    hi / lo - 1 <= tolerance; hi is returned. A midpoint that lands exactly on the boundary
    (unclassified) is returned as is.
    """
    RecursionSpec(C=C, beta=beta, seed=(0.0, 0.0, 0.0), k_max=k_max)
    start = _outcome(C, beta, 1.0, k_max)
    if start is RecursionOutcome.UNCLASSIFIED:
        return 1.0
    lo, hi = (1.0, 2.0) if start is RecursionOutcome.CONVERGES else (0.5, 1.0)
    for _ in range(BRACKET_STEPS):
        if start is RecursionOutcome.CONVERGES:
            outcome = _outcome(C, beta, hi, k_max)
            if outcome is RecursionOutcome.UNCLASSIFIED:
                return hi
            if outcome is RecursionOutcome.DIVERGES:
                break
            lo, hi = hi, 2 * hi
        else:
            outcome = _outcome(C, beta, lo, k_max)
            if outcome is RecursionOutcome.UNCLASSIFIED:
                return lo
            if outcome is RecursionOutcome.CONVERGES:
                break
            if lo / 2 == 0:
                raise ValidationFailure(f"threshold for C={C!r}, beta={beta!r} is below the float range")
            lo, hi = lo / 2, lo
    else:
        raise ValidationFailure(f"could not bracket the threshold for C={C!r}, beta={beta!r}")

    while hi / lo - 1 > tolerance:
        mid = math.sqrt(lo * hi)
        outcome = _outcome(C, beta, mid, k_max)
        if outcome is RecursionOutcome.UNCLASSIFIED:
            return mid
        if outcome is RecursionOutcome.CONVERGES:
            lo = mid
        else:
            hi = mid
    logger.debug(f"recursion threshold C={C!r} beta={beta!r}: {hi!r}")
    return hi


def threshold_closed_form(C: float, beta: float) -> float:
    """
    Exact threshold for equal seeds: C^-(3x/(1-x)^2 + j x/(1-x)) with x = 1/beta.

    Along k = 3m + j the normalised log l_k / beta^m tends to l_j + ln C sum_i (3i + j) x^i.
    The residue class j = 2 binds for C >= 1 and j = 0 for C < 1.
    """
    RecursionSpec(C=C, beta=beta, seed=(0.0, 0.0, 0.0))
    x = 1 / beta
    residue = 2 if C >= 1 else 0
    return float(C ** (-(3 * x / (1 - x) ** 2 + residue * x / (1 - x))))


def degiorgi_recursion(spec: RecursionSpec) -> RecursionResult:
    """Classify the seeded run and attach the convergence threshold for equal seeds."""
    result = classify(spec)
    if result.outcome is RecursionOutcome.UNCLASSIFIED:
        logger.debug(f"recursion C={spec.C!r} beta={spec.beta!r} unclassified after {spec.k_max} steps")
    threshold = recursion_threshold(spec.C, spec.beta, spec.k_max)
    return dataclasses.replace(result, threshold_epsilon0=threshold)
