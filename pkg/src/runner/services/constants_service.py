import asyncio
import logging
from collections.abc import Sequence
from pathlib import Path

from configs import OutputSettings, WorkerSettings
from core.constants import SweepRow, admissible_c0, chain_check, derive, eta_from_lambda, sweep
from runner.repositories.report_repository import ReportRepository
from runner.schemas import DiagnosticsReport, to_payload

logger = logging.getLogger(__name__)

DEFAULT_DIRECTORY = Path("output")


class ConstantsService:
    def __init__(self, reports: ReportRepository, output: OutputSettings, workers: WorkerSettings) -> None:
        self._reports = reports
        self._output = output
        self._workers = workers

    def _path(self, directory: Path | None, name: str) -> Path:
        return self._output.resolve(directory if directory is not None else DEFAULT_DIRECTORY) / name

    async def ledger(
        self,
        alpha: float,
        c0: float,
        alpha0: float | None = None,
        barrier: bool = False,
        directory: Path | None = None,
    ) -> tuple[DiagnosticsReport, Path]:
        logger.info(f"Deriving constants for alpha={alpha} c0={c0} alpha0={alpha0} barrier={barrier}")
        try:
            ledger = await asyncio.to_thread(derive, alpha, c0, alpha0=alpha0, barrier=barrier)
            check = chain_check(ledger)
            report = DiagnosticsReport(
                kind="constants",
                parameters=to_payload({"alpha": alpha, "c0": c0, "alpha0": alpha0, "barrier": barrier}),
                results=to_payload(
                    {
                        "ledger": ledger,
                        "window": admissible_c0(alpha, alpha0, ledger.a),
                        "check": check,
                        "eta": eta_from_lambda(ledger.lambda_starstar, ledger.lambda_),
                    }
                ),
            )
            path = await asyncio.to_thread(self._reports.write_report, self._path(directory, "constants.json"), report)
        except Exception as e:
            logger.error(f"Error deriving constants: {e}", exc_info=True)
            raise

        logger.info(f"Constants chain {'holds' if check.passed else 'fails: ' + ', '.join(check.failing)}")
        return report, path

    async def sweep(
        self,
        alphas: Sequence[float],
        alpha0: float | None = None,
        barrier: bool = False,
        jobs: int | None = None,
        directory: Path | None = None,
    ) -> tuple[DiagnosticsReport, Path]:
        """Ledgers at the window midpoints, at most `jobs` alphas at a time; empty windows are rows too."""
        semaphore = asyncio.Semaphore(jobs or self._workers.JOBS)

        async def _row(alpha: float) -> SweepRow:
            async with semaphore:
                rows = await asyncio.to_thread(sweep, [alpha], alpha0, barrier)
                return rows[0]

        logger.info(f"Sweeping constants over {len(alphas)} values of alpha")
        try:
            rows = await asyncio.gather(*(_row(alpha) for alpha in alphas))
            report = DiagnosticsReport(
                kind="constants-sweep",
                parameters=to_payload({"alphas": list(alphas), "alpha0": alpha0, "barrier": barrier}),
                results=to_payload(
                    {
                        "rows": rows,
                        "empty_windows": [row.alpha for row in rows if row.window.empty],
                        "failing": {str(row.alpha): row.check.failing for row in rows if row.check is not None},
                    }
                ),
            )
            path = await asyncio.to_thread(
                self._reports.write_report, self._path(directory, "constants_sweep.json"), report
            )
        except Exception as e:
            logger.error(f"Error sweeping constants: {e}", exc_info=True)
            raise

        logger.info(f"Constants sweep written to {path}")
        return report, path
