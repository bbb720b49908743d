import dataclasses
import logging

import numpy as np

from core.dto import RealField, SolverConfig, Trajectory
from core.exceptions import FieldMismatchError, ValidationFailure
from core.initial_conditions import make_initial_condition
from core.solver import evolve_field, rescaled_grid
from core.spectral import l2_norm, sobolev_seminorm, to_spectral

logger = logging.getLogger(__name__)

ENERGY_TOLERANCE_FACTOR = 1e-6
MEAN_ZERO_TOLERANCE = 1e-10
FIT_POINTS = 32


@dataclasses.dataclass(frozen=True, slots=True)
class LevelSetEnergyResult:
    """
    Truncated energy balance between two snapshots.

    lhs is ||theta_lambda(t2)||^2 - ||theta_lambda(t1)||^2, rhs the time integral of
    ||Lambda^(alpha/2) theta_lambda||^2. The standard inequality is lhs + 2 rhs <= 0;
    flipped_sign_residual keeps lhs - 2 rhs for comparison.
    """

    level: float
    t1: float
    t2: float
    lhs: float
    rhs: float
    residual: float
    flipped_sign_residual: float
    tolerance: float
    satisfied: bool


@dataclasses.dataclass(frozen=True, slots=True)
class DecayFit:
    fitted_slope: float
    intercept: float
    expected_slope: float
    C_estimate: float
    r2_power: float
    r2_exponential: float
    non_power_law: bool
    points: int


@dataclasses.dataclass(frozen=True, slots=True)
class ScalingCheck:
    r: float
    t: float
    defect: float
    relative_defect: float


def truncate(field: RealField, level: float) -> RealField:
    return RealField(grid=field.grid, samples=np.maximum(field.samples - level, 0.0))


def level_set_energy_check(
    traj: Trajectory, level: float, t1: float, t2: float, tolerance: float | None = None
) -> LevelSetEnergyResult:
    """
    Check ||theta_l(t2)||^2 - ||theta_l(t1)||^2 + 2 int ||Lambda^(alpha/2) theta_l||^2 <= tolerance.

    theta_l = (theta - level)_+; the dissipation integral is a trapezoid over the snapshots
    in [t1, t2]. The default tolerance is 1e-6 ||theta_0||_2^2.
    """
    if not level >= 0:
        raise ValidationFailure(f"level must be non-negative, got {level}")
    if not t1 < t2:
        raise ValidationFailure(f"need t1 < t2, got t1={t1!r}, t2={t2!r}")
    first, last = traj.index_of(t1), traj.index_of(t2)
    window = traj.snapshots[first : last + 1]
    alpha = traj.grid.alpha

    truncated = [truncate(snapshot.field, level) for snapshot in window]
    seminorms = np.array([sobolev_seminorm(to_spectral(f), alpha) ** 2 for f in truncated])
    times = np.array([snapshot.t for snapshot in window])
    lhs = l2_norm(truncated[-1]) ** 2 - l2_norm(truncated[0]) ** 2
    rhs = float(np.trapezoid(seminorms, times))

    if tolerance is None:
        tolerance = ENERGY_TOLERANCE_FACTOR * l2_norm(traj.initial.field) ** 2
    residual = lhs + 2 * rhs
    logger.debug(f"level-set check level={level!r} [{t1!r}, {t2!r}]: residual={residual:.3e}")
    return LevelSetEnergyResult(
        level=level,
        t1=t1,
        t2=t2,
        lhs=lhs,
        rhs=rhs,
        residual=residual,
        flipped_sign_residual=lhs - 2 * rhs,
        tolerance=tolerance,
        satisfied=residual <= tolerance,
    )


def _r_squared(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    slope, intercept = np.polyfit(x, y, 1)
    residuals = y - (slope * x + intercept)
    total = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(residuals**2)) / total if total > 0 else 1.0
    return float(slope), float(intercept), r2


def decay_exponent(traj: Trajectory, window: tuple[float, float]) -> DecayFit:
    """
    Least-squares slope of log sup|theta| against log t on the window.

    The series is resampled at FIT_POINTS log-uniform times (linear interpolation in log-log)
    so that every decade of the window weighs the same. The fit is compared with an
    exponential law (log sup against t); when the exponential explains the data better the
    result is flagged non_power_law. points counts the raw samples in the window.
    """
    t_lower, t_upper = window
    if not 0 < t_lower < t_upper:
        raise ValidationFailure(f"window must satisfy 0 < tA < tB, got {window}")
    initial = traj.initial.field
    l2_initial = l2_norm(initial)
    if abs(initial.mean) > MEAN_ZERO_TOLERANCE * max(1.0, float(np.max(np.abs(initial.samples)))):
        raise ValidationFailure(f"decay fit needs mean-zero data, mean is {initial.mean!r}")
    if l2_initial == 0:
        raise ValidationFailure("decay fit needs nonzero data")

    if traj.norms:
        series = [(record.t, record.sup) for record in traj.norms]
    else:
        series = [(s.t, float(np.max(np.abs(s.field.samples)))) for s in traj.snapshots]
    points = [(t, sup) for t, sup in series if t_lower <= t <= t_upper]
    if len(points) < 3:
        raise FieldMismatchError(f"window {window} holds {len(points)} samples, need at least 3")
    times = np.array([t for t, _ in points])
    sups = np.array([sup for _, sup in points])
    if np.any(sups <= 0):
        raise ValidationFailure("sup norm vanished inside the window")

    log_times = np.linspace(np.log(times[0]), np.log(times[-1]), FIT_POINTS)
    log_sup = np.interp(log_times, np.log(times), np.log(sups))
    slope, intercept, r2_power = _r_squared(log_times, log_sup)
    _, _, r2_exponential = _r_squared(np.exp(log_times), log_sup)
    n, alpha = traj.grid.n, traj.grid.alpha
    expected = -n / (2 * alpha)
    c_estimate = float(np.max(times ** (n / (2 * alpha)) * sups / l2_initial))
    return DecayFit(
        fitted_slope=slope,
        intercept=intercept,
        expected_slope=expected,
        C_estimate=c_estimate,
        r2_power=r2_power,
        r2_exponential=r2_exponential,
        non_power_law=r2_exponential > r2_power,
        points=len(points),
    )


def scaling_symmetry_defect(cfg: SolverConfig, r: float) -> ScalingCheck:
    """
    Compare the run from theta_r(x) = r^-alpha theta(r x) with r^-alpha theta(r x, r^alpha t).

    Only the linear flow (flow_scale = 0) carries this symmetry. theta_r lives on the grid of
    period L / r, so both sides are sampled at the same node indices.
    """
    if cfg.flow_scale != 0:
        raise ValidationFailure("the scaling symmetry is checked on the linear flow, set flow_scale = 0")
    alpha = cfg.grid.alpha
    theta = make_initial_condition(cfg.ic, cfg.grid, cfg.seed)
    rescaled = RealField(grid=rescaled_grid(cfg.grid, r), samples=r ** (-alpha) * theta.samples)

    evolved_rescaled = evolve_field(rescaled, cfg, cfg.t_end)
    evolved = evolve_field(theta, cfg, r**alpha * cfg.t_end)
    reference = r ** (-alpha) * evolved.samples

    defect = float(np.max(np.abs(evolved_rescaled.samples - reference)))
    scale = float(np.max(np.abs(reference)))
    return ScalingCheck(r=r, t=cfg.t_end, defect=defect, relative_defect=defect / scale if scale > 0 else 0.0)
