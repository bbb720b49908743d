import asyncio
import logging
import math
from pathlib import Path
from typing import Any

from configs import OutputSettings
from core.degiorgi import (
    ExtendedTrajectory,
    holder_seminorm,
    isoperimetric_check,
    level_set_stats,
    oscillation_decay_sequence,
    second_lemma_bound,
)
from core.dto import Cylinder, RealField, Trajectory
from core.energy import decay_exponent, level_set_energy_check
from core.enums import DiagnoseKind
from core.exceptions import ValidationFailure
from core.extension import extend
from core.recursion import degiorgi_recursion, threshold_closed_form
from core.spectral import to_spectral
from runner.repositories.checkpoint_repository import CheckpointRepository
from runner.repositories.report_repository import ReportRepository
from runner.schemas import DiagnosticsConfig, DiagnosticsReport, RunConfig, to_payload
from runner.services.simulation_service import SimulationService

logger = logging.getLogger(__name__)


def _anchor(traj: Trajectory, diagnostics: DiagnosticsConfig) -> float:
    return float(traj.times[-1]) if diagnostics.t_anchor is None else diagnostics.t_anchor


def _center(diagnostics: DiagnosticsConfig) -> tuple[float, ...] | None:
    return tuple(diagnostics.center) if diagnostics.center is not None else None


def _extended(traj: Trajectory, diagnostics: DiagnosticsConfig) -> ExtendedTrajectory:
    ladder = diagnostics.z_ladder
    return ExtendedTrajectory(traj, ladder.heights(), ladder.method)


def oscillation_results(traj: Trajectory, diagnostics: DiagnosticsConfig) -> dict[str, Any]:
    source: Trajectory | ExtendedTrajectory = _extended(traj, diagnostics) if diagnostics.extended else traj
    sequence = oscillation_decay_sequence(
        source,
        rho=diagnostics.shrink,
        k_max=diagnostics.k_max,
        r_start=diagnostics.r_start,
        t_anchor=diagnostics.t_anchor,
        center=_center(diagnostics),
    )
    exponent = sequence.fitted_exponent
    seminorm = None
    if math.isfinite(exponent) and 0 < exponent <= 1:
        seminorm = holder_seminorm(traj.final.field.samples, traj.grid.dx, exponent)
    return {"sequence": sequence, "holder_seminorm": seminorm}


def level_set_results(traj: Trajectory, diagnostics: DiagnosticsConfig) -> dict[str, Any]:
    anchor = _anchor(traj, diagnostics)
    ext = _extended(traj, diagnostics)
    cylinder = Cylinder(r=diagnostics.radius, alpha=traj.grid.alpha, t_anchor=anchor, center=_center(diagnostics))
    t_final = float(traj.times[-1])
    results: dict[str, Any] = {
        "cylinder": cylinder,
        "stats": level_set_stats(ext, cylinder),
        "energy_checks": [level_set_energy_check(traj, level, 0.0, t_final) for level in diagnostics.levels],
    }
    if diagnostics.second_lemma:
        if diagnostics.a is None:
            raise ValidationFailure("the second-lemma bound needs diagnostics.a")
        results["second_lemma"] = second_lemma_bound(ext, a=diagnostics.a, t_anchor=anchor, m=diagnostics.m)
    return results


def isoperimetric_results(field: RealField, diagnostics: DiagnosticsConfig) -> dict[str, Any]:
    ladder = diagnostics.z_ladder
    E = extend(to_spectral(field), ladder.heights(), ladder.method)
    check = isoperimetric_check(E, diagnostics.energy_cap, r=diagnostics.radius, center=_center(diagnostics))
    return {"check": check, "within_energy_factor": check.within_energy_factor()}


def recursion_results(diagnostics: DiagnosticsConfig) -> dict[str, Any]:
    recursion = diagnostics.recursion
    return {
        "result": degiorgi_recursion(recursion.to_spec()),
        "closed_form_threshold": threshold_closed_form(recursion.C, recursion.beta),
    }


class DiagnosticsService:
    def __init__(
        self,
        simulation: SimulationService,
        checkpoints: CheckpointRepository,
        reports: ReportRepository,
        output: OutputSettings,
    ) -> None:
        self._simulation = simulation
        self._checkpoints = checkpoints
        self._reports = reports
        self._output = output

    async def _write(
        self, config: RunConfig, kind: str, parameters: dict[str, Any], results: Any
    ) -> tuple[DiagnosticsReport, Path]:
        report = DiagnosticsReport(
            kind=kind,
            parameters={
                **to_payload(parameters),
                "config_hash": self._reports.compute_config_hash(config),
            },
            results=to_payload(results),
        )
        path = self._output.resolve(config.output.directory) / f"{config.output.prefix}_{kind}.json"
        return report, await asyncio.to_thread(self._reports.write_report, path, report)

    async def diagnose(
        self, kind: DiagnoseKind, config: RunConfig, checkpoint: Path | None = None
    ) -> tuple[DiagnosticsReport, Path]:
        """Run the configured simulation unless the diagnostic can use a checkpoint, then write the report."""
        diagnostics = config.diagnostics
        logger.info(f"Diagnosing {kind.value} for {config.output.prefix}")
        try:
            if kind is DiagnoseKind.RECURSION:
                results = await asyncio.to_thread(recursion_results, diagnostics)
            elif kind is DiagnoseKind.ISOPERIMETRIC and checkpoint is not None:
                stored = await asyncio.to_thread(self._checkpoints.load, checkpoint)
                field = stored.to_snapshot(config.grid.L).field
                results = await asyncio.to_thread(isoperimetric_results, field, diagnostics)
            else:
                traj = await self._simulation.trajectory(config)
                if kind is DiagnoseKind.OSCILLATION:
                    results = await asyncio.to_thread(oscillation_results, traj, diagnostics)
                elif kind is DiagnoseKind.LEVELSETS:
                    results = await asyncio.to_thread(level_set_results, traj, diagnostics)
                else:
                    results = await asyncio.to_thread(isoperimetric_results, traj.final.field, diagnostics)
            parameters = {"diagnostics": diagnostics, "checkpoint": checkpoint.name if checkpoint else None}
            report, path = await self._write(config, kind.value, parameters, results)
        except Exception as e:
            logger.error(f"Error computing {kind.value} diagnostics: {e}", exc_info=True)
            raise

        logger.info(f"{kind.value} report written to {path}")
        return report, path

    async def decay(
        self, config: RunConfig, window: tuple[float, float] | None = None
    ) -> tuple[DiagnosticsReport, Path]:
        fit_window = window if window is not None else config.diagnostics.decay_window
        logger.info(f"Fitting sup-norm decay on {fit_window}")
        traj = await self._simulation.trajectory(config)
        try:
            fit = await asyncio.to_thread(decay_exponent, traj, fit_window)
            report, path = await self._write(config, "decay", {"window": fit_window}, {"fit": fit})
        except Exception as e:
            logger.error(f"Error fitting the decay exponent: {e}", exc_info=True)
            raise

        logger.info(f"Decay slope {fit.fitted_slope:.4f} against {fit.expected_slope:.4f}, report {path}")
        return report, path
