import asyncio
import dataclasses
import logging
from pathlib import Path

from configs import OutputSettings
from core.extension import energy_minimality_gap, extend, extension_residual
from core.spectral import to_spectral
from runner.repositories.checkpoint_repository import SUFFIX, Checkpoint, CheckpointRepository
from runner.repositories.report_repository import ReportRepository
from runner.schemas import DiagnosticsReport, ZLadderConfig, to_payload

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class ExtensionOutcome:
    level_paths: tuple[Path, ...]
    report_path: Path


class ExtensionService:
    """Lifts a checkpointed field to theta* on a z-ladder, one checkpoint per height."""

    def __init__(
        self,
        checkpoints: CheckpointRepository,
        reports: ReportRepository,
        output: OutputSettings,
    ) -> None:
        self._checkpoints = checkpoints
        self._reports = reports
        self._output = output

    async def extend(
        self, checkpoint_path: Path, L: float, ladder: ZLadderConfig, directory: Path | None = None
    ) -> ExtensionOutcome:
        checkpoint_path = Path(checkpoint_path)
        logger.info(f"Extending {checkpoint_path} on {ladder.levels} levels in [{ladder.z_min}, {ladder.z_max}]")
        snapshot = (await asyncio.to_thread(self._checkpoints.load, checkpoint_path)).to_snapshot(L)
        target = self._output.resolve(directory if directory is not None else checkpoint_path.parent)

        try:
            E = await asyncio.to_thread(extend, to_spectral(snapshot.field), ladder.heights(), ladder.method)
            residual = await asyncio.to_thread(extension_residual, E)
            gap = await asyncio.to_thread(energy_minimality_gap, E)
            paths = []
            for index, values in enumerate(E.values):
                level = Checkpoint(alpha=E.grid.alpha, t=snapshot.t, samples=values)
                path = target / f"{checkpoint_path.stem}_z{index:03d}{SUFFIX}"
                paths.append(await asyncio.to_thread(self._checkpoints.save, path, level))

            report = DiagnosticsReport(
                kind="extend",
                parameters=to_payload({"checkpoint": checkpoint_path.name, "L": L, "ladder": ladder}),
                results=to_payload(
                    {
                        "t": snapshot.t,
                        "alpha": E.grid.alpha,
                        "z_levels": E.z_levels,
                        "files": [path.name for path in paths],
                        "residual": residual,
                        "energy_gap": gap,
                    }
                ),
            )
            report_path = await asyncio.to_thread(
                self._reports.write_report, target / f"{checkpoint_path.stem}_extend.json", report
            )
        except Exception as e:
            logger.error(f"Error extending {checkpoint_path}: {e}", exc_info=True)
            raise

        logger.info(f"Extension written: {len(paths)} levels, report {report_path}")
        return ExtensionOutcome(level_paths=tuple(paths), report_path=report_path)
