import dataclasses
import logging
import math

import numpy as np

from core.dto import GridSpec, NormRecord, RealField, Snapshot, SolverConfig, SpectralField, Trajectory
from core.exceptions import BlowUpError, ValidationFailure
from core.initial_conditions import make_initial_condition
from core.integrators import Integrator, make_integrator
from core.spectral import ensure_same_grid, sobolev_seminorm, to_real, to_spectral

logger = logging.getLogger(__name__)

STEP_ROUNDING = 1e-9


def modified_flow_scale(alpha: float, r0: float) -> float:
    """Advection coefficient r0^(alpha - epsilon) of the rescaled equation, epsilon = 1 - alpha."""
    return float(r0 ** (2 * alpha - 1))


def step_count(t_end: float, dt: float) -> int:
    return math.ceil(t_end / dt - STEP_ROUNDING) if t_end > 0 else 0


def step(state: SpectralField, cfg: SolverConfig) -> SpectralField:
    """One time step of size cfg.dt."""
    ensure_same_grid(cfg.grid, state.grid)
    return make_integrator(cfg.grid, cfg.flow_scale, cfg.scheme, cfg.energy_projection).step(state, cfg.dt)


class SqgSolver:
    """
    Runs the dissipative SQG flow for one configuration.

    The step size is adjusted down to t_end / ceil(t_end / dt) so that the last step lands on
    t_end exactly. Norms are recorded after every step, snapshots every `snapshot_every` steps
    and always at the final time.
    """

    def __init__(self, config: SolverConfig) -> None:
        self._config = config
        self._integrator: Integrator = make_integrator(
            config.grid, config.flow_scale, config.scheme, config.energy_projection
        )

    @property
    def config(self) -> SolverConfig:
        return self._config

    def initial_field(self) -> RealField:
        return make_initial_condition(self._config.ic, self._config.grid, self._config.seed)

    def _record(self, t: float, state: SpectralField, real: RealField, previous: NormRecord | None) -> NormRecord:
        grid = self._config.grid
        h_alpha_half = sobolev_seminorm(state, grid.alpha)
        dissipation = 0.0
        if previous is not None:
            dissipation = 0.5 * (t - previous.t) * (previous.h_alpha_half**2 + h_alpha_half**2)
        return NormRecord(
            t=t,
            l2=float(np.sqrt(grid.volume * np.sum(np.abs(state.coeffs) ** 2))),
            sup=float(np.max(np.abs(real.samples))),
            h_alpha_half=h_alpha_half,
            dissipation=dissipation,
        )

    def run(self, initial: RealField | None = None) -> Trajectory:
        cfg = self._config
        field = initial if initial is not None else self.initial_field()
        ensure_same_grid(cfg.grid, field.grid)

        n_steps = step_count(cfg.t_end, cfg.dt)
        dt = cfg.t_end / n_steps if n_steps else cfg.dt
        logger.debug(f"running {n_steps} steps of dt={dt!r} with {self._integrator.scheme.value}")

        state = to_spectral(field)
        snapshots = [Snapshot(t=0.0, field=field)]
        norms = [self._record(0.0, state, field, None)]
        last_valid = snapshots[0]

        for index in range(1, n_steps + 1):
            t_prev, t = (index - 1) * dt, index * dt
            try:
                state = self._integrator.step(state, dt, t=t_prev)
            except BlowUpError as e:
                logger.error(f"Blow-up between t={t_prev!r} and t={t!r}", exc_info=True)
                raise BlowUpError(t=t, last_snapshot=last_valid) from e
            real = to_real(state)
            norms.append(self._record(t, state, real, norms[-1]))
            last_valid = Snapshot(t=t, field=real)
            if index % cfg.snapshot_every == 0 or index == n_steps:
                snapshots.append(last_valid)

        return Trajectory(grid=cfg.grid, snapshots=tuple(snapshots), norms=tuple(norms))


def run(cfg: SolverConfig, initial: RealField | None = None) -> Trajectory:
    return SqgSolver(cfg).run(initial)


def evolve_field(field: RealField, cfg: SolverConfig, t_end: float) -> RealField:
    """Final state of a run from an explicit initial field, keeping only the last snapshot."""
    config = dataclasses.replace(cfg, grid=field.grid, t_end=t_end, snapshot_every=max(1, step_count(t_end, cfg.dt)))
    return run(config, field).final.field


def rescaled_grid(grid: GridSpec, r: float) -> GridSpec:
    if not r > 0:
        raise ValidationFailure(f"r must be positive, got {r}")
    return dataclasses.replace(grid, L=grid.L / r)
