import asyncio
import logging
from pathlib import Path

from configs import OutputSettings, WorkerSettings
from core.enums import VerifySuite
from core.verification import SuiteParameters, SuiteResult, expand, run_suite
from runner.repositories.report_repository import ReportRepository
from runner.schemas import DiagnosticsReport, to_payload

logger = logging.getLogger(__name__)

DEFAULT_DIRECTORY = Path("output")


def format_table(results: list[SuiteResult]) -> str:
    """Plain-text pass/fail table, one row per check."""
    rows = [("suite", "check", "value", "threshold", "result")]
    for result in results:
        for check in result.checks:
            verdict = "PASS" if check.passed else "FAIL"
            rows.append((result.suite.value, check.name, f"{check.value:.3e}", f"{check.threshold:.1e}", verdict))
    widths = [max(len(row[column]) for row in rows) for column in range(len(rows[0]))]
    return "\n".join("  ".join(cell.ljust(width) for cell, width in zip(row, widths, strict=True)) for row in rows)


class VerificationService:
    def __init__(self, reports: ReportRepository, output: OutputSettings, workers: WorkerSettings) -> None:
        self._reports = reports
        self._output = output
        self._workers = workers

    async def verify(
        self,
        suite: VerifySuite,
        params: SuiteParameters,
        jobs: int | None = None,
        directory: Path | None = None,
    ) -> tuple[list[SuiteResult], Path]:
        """Run the suite (or every suite for 'all') with at most `jobs` suites in flight."""
        semaphore = asyncio.Semaphore(jobs or self._workers.JOBS)

        async def _run(name: VerifySuite) -> SuiteResult:
            async with semaphore:
                logger.info(f"Running {name.value} suite: alpha={params.alpha} N={params.N}")
                result = await asyncio.to_thread(run_suite, name, params)
                logger.info(f"Suite {name.value} {'passed' if result.passed else 'failed'}")
                return result

        try:
            results = list(await asyncio.gather(*(_run(name) for name in expand(suite))))
            report = DiagnosticsReport(
                kind="verify",
                parameters=to_payload({"suite": suite, "params": params}),
                results=to_payload({"suites": results, "passed": all(result.passed for result in results)}),
            )
            target = self._output.resolve(directory if directory is not None else DEFAULT_DIRECTORY)
            path = await asyncio.to_thread(self._reports.write_report, target / f"verify_{suite.value}.json", report)
        except Exception as e:
            logger.error(f"Error running the {suite.value} verification: {e}", exc_info=True)
            raise

        return results, path
