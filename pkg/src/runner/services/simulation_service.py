import asyncio
import dataclasses
import logging
from pathlib import Path

import numpy as np

from configs import OutputSettings
from core.dto import Snapshot, Trajectory
from core.exceptions import BlowUpError
from core.solver import run
from runner.repositories.checkpoint_repository import SUFFIX, CheckpointRepository
from runner.repositories.report_repository import ReportRepository
from runner.schemas import DiagnosticsReport, RunConfig, to_payload

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class SimulationOutcome:
    trajectory: Trajectory
    norms_path: Path
    checkpoint_paths: tuple[Path, ...]
    report_path: Path


class SimulationService:
    def __init__(
        self,
        checkpoints: CheckpointRepository,
        reports: ReportRepository,
        output: OutputSettings,
    ) -> None:
        self._checkpoints = checkpoints
        self._reports = reports
        self._output = output

    def output_dir(self, config: RunConfig) -> Path:
        return self._output.resolve(config.output.directory)

    async def trajectory(self, config: RunConfig) -> Trajectory:
        """Run the solver without writing anything; a blow-up still leaves its last valid snapshot."""
        cfg = config.to_solver_config()
        logger.info(
            f"Running solver: n={cfg.grid.n} N={cfg.grid.N} alpha={cfg.grid.alpha} "
            f"dt={cfg.dt} t_end={cfg.t_end} ic={cfg.ic.name.value} seed={cfg.seed}"
        )
        try:
            return await asyncio.to_thread(run, cfg)
        except BlowUpError as e:
            if isinstance(e.last_snapshot, Snapshot):
                path = self.output_dir(config) / f"{config.output.prefix}_last_valid{SUFFIX}"
                await asyncio.to_thread(self._checkpoints.save_snapshot, path, e.last_snapshot)
                logger.info(f"Last valid snapshot at t={e.last_snapshot.t!r} saved to {path}")
            logger.error(f"Solver blew up: {e}", exc_info=True)
            raise

    async def simulate(self, config: RunConfig) -> SimulationOutcome:
        traj = await self.trajectory(config)
        directory = self.output_dir(config)
        prefix = config.output.prefix

        try:
            norms_path = await asyncio.to_thread(
                self._reports.write_norms, directory / f"{prefix}_norms.csv", traj.norms
            )
            snapshots = traj.snapshots if config.output.checkpoints else (traj.final,)
            offset = 0 if config.output.checkpoints else len(traj.snapshots) - 1
            checkpoint_paths = []
            for index, snapshot in enumerate(snapshots, start=offset):
                path = directory / f"{prefix}_{index:05d}{SUFFIX}"
                checkpoint_paths.append(await asyncio.to_thread(self._checkpoints.save_snapshot, path, snapshot))

            l2 = np.array([record.l2 for record in traj.norms])
            report = DiagnosticsReport(
                kind="simulate",
                parameters={
                    "config": config.model_dump(mode="json"),
                    "config_hash": self._reports.compute_config_hash(config),
                },
                results=to_payload(
                    {
                        "steps": len(traj.norms) - 1,
                        "snapshot_times": traj.times,
                        "final": traj.norms[-1],
                        "l2_non_increasing": bool(np.all(np.diff(l2) <= 1e-10 * l2[0])),
                        "mean_drift": abs(traj.final.field.mean - traj.initial.field.mean),
                        "norms_csv": norms_path.name,
                        "checkpoints": [path.name for path in checkpoint_paths],
                    }
                ),
            )
            report_path = await asyncio.to_thread(
                self._reports.write_report, directory / f"{prefix}_simulate.json", report
            )
        except Exception as e:
            logger.error(f"Error writing simulation output to {directory}: {e}", exc_info=True)
            raise

        logger.info(
            f"Simulation finished: {len(traj.snapshots)} snapshots, final sup={traj.norms[-1].sup:.6g}, "
            f"report {report_path}"
        )
        return SimulationOutcome(
            trajectory=traj,
            norms_path=norms_path,
            checkpoint_paths=tuple(checkpoint_paths),
            report_path=report_path,
        )
