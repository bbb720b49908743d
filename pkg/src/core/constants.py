"""
Ledger of the explicit constants in the Hölder regularity argument.

Every field is a closed-form function of alpha, c0 and (for the small-alpha variant) alpha0.
Powers of two are written as 2.0 ** (m / alpha) so that exactly representable cases, such as
r0 = 0.6 / 256 at alpha = 0.75, stay exact.
"""

import dataclasses
import logging
import math
from collections.abc import Iterable

from core.barrier import BarrierSpec, lambda_estimate
from core.exceptions import ValidationFailure
from core.measures import S_CAP, cylinder_measure, k_plus
from core.recursion import recursion_threshold

logger = logging.getLogger(__name__)

A_FRACTION = 0.99
Q4_RADIUS = 4.0
MAX_LOG = 709.0

BARRIER_WINDOW = "barrier"
HOLDER_WINDOW = "holder"
MODIFIED_WINDOW = "modified"
SHRINK = "shrink"

ETA_BOUND = "2(1-eta) < 256 r0^alpha"
SHRINK_BOUND = "r0 < c0^2 a/128"
C1_BOUND = "r0^-alpha < C1"
R0_WINDOW_UPPER = "r0 < c0^2/(2^(1/alpha) 32)"
R0_WINDOW_LOWER = "r0 > c0/128^(1/alpha)"
BARRIER_C0_BOUND = "c0 > 32/64^(1/alpha)"
HOLDER_C0_BOUND = "c0 > 32^(1-1/alpha)"
MODIFIED_C0_BOUND = "c0 > 2^(-1/alpha0)"
A_POSITIVE = "1 - (2^(1/alpha0) c0)^(2 alpha0 - 1) > 0"


def _check_alpha(alpha: float, alpha0: float | None) -> None:
    if not 0 < alpha < 1:
        raise ValidationFailure(f"alpha must be in (0, 1), got {alpha}")
    if alpha0 is not None and not 0 < alpha0 <= alpha:
        raise ValidationFailure(f"alpha0 must be in (0, alpha], got {alpha0}")


def a_supremum(alpha: float) -> float:
    return 4 / 2.0 ** (1 / alpha)


def shrink_lower_bound(alpha: float, a: float) -> float:
    """c0 above which r0 = c0 / 64^(1/alpha) stays below c0^2 a / 128."""
    return 128 / (2.0 ** (6 / alpha) * a)


@dataclasses.dataclass(frozen=True)
class AdmissibleWindow:
    """
    Admissible c0 interval (lower, 1).

    lower is the largest of the barrier, holder and (with alpha0) modified-equation bounds; the shrink
    bound of the r0 chain is reported next to them and only enters combined_lower.
    """

    alpha: float
    alpha0: float | None
    bounds: dict[str, float]
    lower: float
    upper: float
    binding: str
    combined_lower: float

    @property
    def empty(self) -> bool:
        return not self.lower < self.upper

    @property
    def combined_empty(self) -> bool:
        return not self.combined_lower < self.upper

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)

    def contains(self, c0: float) -> bool:
        return self.lower < c0 < self.upper


def admissible_c0(alpha: float, alpha0: float | None = None, a: float | None = None) -> AdmissibleWindow:
    _check_alpha(alpha, alpha0)
    bounds = {
        BARRIER_WINDOW: 32 / 2.0 ** (6 / alpha),
        HOLDER_WINDOW: 2.0 ** (5 * (1 - 1 / alpha)),
    }
    if alpha0 is not None:
        bounds[MODIFIED_WINDOW] = 2.0 ** (-1 / alpha0)
    binding = max(bounds, key=lambda name: bounds[name])
    lower = bounds[binding]
    shrink = shrink_lower_bound(alpha, a if a is not None else A_FRACTION * a_supremum(alpha))
    window = AdmissibleWindow(
        alpha=alpha,
        alpha0=alpha0,
        bounds={**bounds, SHRINK: shrink},
        lower=lower,
        upper=1.0,
        binding=binding,
        combined_lower=max(lower, shrink),
    )
    if window.empty:
        logger.debug(f"empty c0 window at alpha={alpha!r}: lower bound {lower!r} from {binding}")
    return window


@dataclasses.dataclass(frozen=True)
class ConstantsLedger:
    alpha: float
    epsilon: float
    alpha0: float | None
    n: int
    c0: float
    omega: float
    a: float
    a_max: float
    r0: float
    shrink: float
    C1: float
    C_alpha: float
    lambda_: float
    lambda_source: str
    Q4_measure: float
    K_plus: int
    lambda_star: float
    lambda_starstar: float
    eta: float
    epsilon_tilde: float
    A_exact: float
    A_lower: float | None
    B_exact: float
    B_upper: float | None
    flow_scale: float
    recursion_beta: float
    recursion_C: float | None
    M: float | None
    epsilon0: float | None


def derive(
    alpha: float,
    c0: float,
    alpha0: float | None = None,
    a: float | None = None,
    omega: float | None = None,
    barrier: bool = False,
    C_eps: float = 1.0,
    C_u: float = 1.0,
    n: int = 2,
    with_epsilon0: bool = True,
) -> ConstantsLedger:
    """
    Populate the ledger for one (alpha, c0, alpha0).

    lambda comes from the barrier quadrature when barrier is set, otherwise from 1 - c0^alpha.
    The recursion constant uses A_lower when alpha0 is given and A_exact otherwise; when that
    factor is not positive the recursion fields are left empty.
    """
    _check_alpha(alpha, alpha0)
    epsilon = 1 - alpha
    a_max = a_supremum(alpha)
    a_value = A_FRACTION * a_max if a is None else a
    if not 0 < a_value < a_max:
        raise ValidationFailure(f"a must lie in (0, {a_max!r}), got {a_value!r}")
    window = admissible_c0(alpha, alpha0, a_value)
    if not window.contains(c0):
        raise ValidationFailure(f"c0={c0!r} is outside the admissible window ({window.lower!r}, 1)")
    omega_value = 1 - c0 if omega is None else omega
    if C_eps <= 0 or C_u <= 0:
        raise ValidationFailure("C_eps and C_u must be positive")

    r0 = c0 / 2.0 ** (6 / alpha)
    if barrier:
        lam = lambda_estimate(BarrierSpec(omega=omega_value, c0=c0, n=n, alpha=alpha))
        source = "barrier"
    else:
        lam = 1 - c0**alpha
        source = "heuristic"
    measure = cylinder_measure(Q4_RADIUS, n, alpha)
    kp = k_plus(S_CAP, measure)
    lam_star = lam * 2.0 ** (-kp)
    lam_starstar = lam + lam_star - lam * lam_star

    A_exact = 1 - (2.0 ** (1 / alpha) * c0) ** (alpha - epsilon)
    A_lower = 1 - (2.0 ** (1 / alpha0) * c0) ** (2 * alpha0 - 1) if alpha0 is not None else None
    beta = n / (n - alpha / 2)
    A_used = A_lower if A_lower is not None else A_exact
    recursion_C: float | None = None
    M: float | None = None
    epsilon0: float | None = None
    if A_used > 0:
        recursion_C = (2 / lam) ** (1 / (n - alpha / 2)) * A_used ** (-n / (n - alpha / 2))
        log_m = 4 * (n - alpha / 2) / alpha * math.log(recursion_C)
        M = math.inf if log_m > MAX_LOG else max(1.0, math.exp(log_m))
        if with_epsilon0:
            try:
                epsilon0 = recursion_threshold(recursion_C, beta)
            except ValidationFailure:
                logger.debug(f"epsilon0 below the float range for C={recursion_C!r}")

    ledger = ConstantsLedger(
        alpha=alpha,
        epsilon=epsilon,
        alpha0=alpha0,
        n=n,
        c0=c0,
        omega=omega_value,
        a=a_value,
        a_max=a_max,
        r0=r0,
        shrink=c0**2 * a_value / 128,
        C1=64 / c0,
        C_alpha=256 * (128 / (a_value * c0**2)) ** alpha,
        lambda_=lam,
        lambda_source=source,
        Q4_measure=measure,
        K_plus=kp,
        lambda_star=lam_star,
        lambda_starstar=lam_starstar,
        eta=lam_starstar / 2,
        epsilon_tilde=2.0 ** (-7 * (epsilon - alpha) / alpha) / C_eps,
        A_exact=A_exact,
        A_lower=A_lower,
        B_exact=C_u * c0 ** (alpha - epsilon) * 2.0 ** (12 * (epsilon - alpha) / alpha),
        B_upper=C_u * 2.0 ** (17 / alpha0) if alpha0 is not None else None,
        flow_scale=r0 ** (alpha - epsilon),
        recursion_beta=beta,
        recursion_C=recursion_C,
        M=M,
        epsilon0=epsilon0,
    )
    logger.debug(f"ledger alpha={alpha!r} c0={c0!r}: r0={r0!r} lambda={lam!r} eta={ledger.eta!r}")
    return ledger


@dataclasses.dataclass(frozen=True, slots=True)
class Verdict:
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def holds(self) -> bool:
        return self.slack > 0


@dataclasses.dataclass(frozen=True)
class ChainCheck:
    verdicts: dict[str, Verdict]

    @property
    def passed(self) -> bool:
        return all(verdict.holds for verdict in self.verdicts.values())

    @property
    def failing(self) -> list[str]:
        return [name for name, verdict in self.verdicts.items() if not verdict.holds]


def chain_check(ledger: ConstantsLedger) -> ChainCheck:
    """Each inequality as (lhs, rhs) with positive slack rhs - lhs meaning it holds."""
    alpha, c0, r0 = ledger.alpha, ledger.c0, ledger.r0
    verdicts = {
        ETA_BOUND: Verdict(lhs=2 * (1 - ledger.eta), rhs=256 * r0**alpha),
        SHRINK_BOUND: Verdict(lhs=r0, rhs=c0**2 * ledger.a / 128),
        C1_BOUND: Verdict(lhs=r0 ** (-alpha), rhs=ledger.C1),
        R0_WINDOW_UPPER: Verdict(lhs=r0, rhs=c0**2 / (2.0 ** (1 / alpha) * 32)),
        R0_WINDOW_LOWER: Verdict(lhs=c0 / 2.0 ** (7 / alpha), rhs=r0),
        BARRIER_C0_BOUND: Verdict(lhs=32 / 2.0 ** (6 / alpha), rhs=c0),
        HOLDER_C0_BOUND: Verdict(lhs=2.0 ** (5 * (1 - 1 / alpha)), rhs=c0),
    }
    if ledger.alpha0 is not None and ledger.A_lower is not None:
        verdicts[MODIFIED_C0_BOUND] = Verdict(lhs=2.0 ** (-1 / ledger.alpha0), rhs=c0)
        verdicts[A_POSITIVE] = Verdict(lhs=0.0, rhs=ledger.A_lower)
    return ChainCheck(verdicts=verdicts)


@dataclasses.dataclass(frozen=True)
class EtaBracket:
    eta: float
    bracket: tuple[float, float] | None


def eta_from_lambda(lambda_starstar: float, lambda_: float | None = None) -> EtaBracket:
    """eta = lambda** / 2; with lambda known, lambda < lambda** < 2 lambda brackets eta in (lambda/2, lambda)."""
    if not 0 < lambda_starstar < 1:
        raise ValidationFailure(f"lambda** must be in (0, 1), got {lambda_starstar}")
    bracket = None
    if lambda_ is not None:
        if not 0 < lambda_ < 1:
            raise ValidationFailure(f"lambda must be in (0, 1), got {lambda_}")
        bracket = (lambda_ / 2, lambda_)
    return EtaBracket(eta=lambda_starstar / 2, bracket=bracket)


@dataclasses.dataclass(frozen=True)
class SweepRow:
    alpha: float
    window: AdmissibleWindow
    ledger: ConstantsLedger | None
    check: ChainCheck | None


def sweep(
    alphas: Iterable[float], alpha0: float | None = None, barrier: bool = False, with_epsilon0: bool = True
) -> list[SweepRow]:
    """Ledgers at the midpoint of every non-empty window; empty windows are kept as rows without a ledger."""
    rows = []
    for alpha in alphas:
        window = admissible_c0(alpha, alpha0)
        if window.empty:
            rows.append(SweepRow(alpha=alpha, window=window, ledger=None, check=None))
            continue
        ledger = derive(alpha, window.midpoint, alpha0=alpha0, barrier=barrier, with_epsilon0=with_epsilon0)
        rows.append(SweepRow(alpha=alpha, window=window, ledger=ledger, check=chain_check(ledger)))
    return rows


def is_finite_ledger(ledger: ConstantsLedger) -> bool:
    numbers = [value for value in dataclasses.asdict(ledger).values() if isinstance(value, int | float)]
    return all(math.isfinite(value) for value in numbers)
