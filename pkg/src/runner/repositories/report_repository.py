import csv
import hashlib
import json
import threading
from collections import defaultdict
from collections.abc import Sequence
from pathlib import Path

from core.dto import NormRecord
from runner.schemas import DiagnosticsReport, RunConfig

NORM_COLUMNS = ("t", "l2", "sup", "h_alpha_half")


class ReportRepository:
    """CSV norm series and JSON reports; floats are written with repr so they read back exactly."""

    def __init__(self) -> None:
        self._guard = threading.Lock()
        self._locks: defaultdict[Path, threading.Lock] = defaultdict(threading.Lock)

    def _lock(self, path: Path) -> threading.Lock:
        with self._guard:
            return self._locks[path.resolve()]

    @staticmethod
    def compute_config_hash(config: RunConfig) -> str:
        """SHA256 of the run configuration, output section excluded."""
        params = config.model_dump(mode="json", exclude={"output"})
        return hashlib.sha256(json.dumps(params, sort_keys=True).encode()).hexdigest()

    def write_norms(self, path: Path, records: Sequence[NormRecord]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with self._lock(path), path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(NORM_COLUMNS)
            for record in records:
                writer.writerow([repr(float(getattr(record, column))) for column in NORM_COLUMNS])
        return path

    def read_norms(self, path: Path) -> list[dict[str, float]]:
        with Path(path).open(encoding="utf-8", newline="") as handle:
            return [{key: float(value) for key, value in row.items()} for row in csv.DictReader(handle)]

    @staticmethod
    def dumps(report: DiagnosticsReport) -> str:
        return json.dumps(report.model_dump(mode="python"), indent=2, allow_nan=False) + "\n"

    def write_report(self, path: Path, report: DiagnosticsReport) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with self._lock(path):
            path.write_text(self.dumps(report), encoding="utf-8")
        return path

    def read_report(self, path: Path) -> DiagnosticsReport:
        return DiagnosticsReport.model_validate_json(Path(path).read_text(encoding="utf-8"))
