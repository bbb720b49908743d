import struct
from pathlib import Path

import numpy as np
import pytest

from core.dto import RealField, Snapshot, Trajectory
from core.exceptions import CorruptCheckpointError, FieldMismatchError, TruncatedCheckpointError
from runner.repositories.checkpoint_repository import Checkpoint, CheckpointRepository, decode, encode
from runner.repositories.report_repository import ReportRepository
from runner.schemas import DiagnosticsReport, RunConfig


@pytest.fixture
def checkpoint(noise: RealField) -> Checkpoint:
    return Checkpoint.from_snapshot(Snapshot(t=0.125, field=noise))


class TestCheckpointCodec:
    def test_header_layout(self, checkpoint: Checkpoint) -> None:
        data = encode(checkpoint)
        assert data[:6] == b"SQGF\x01\x02"
        assert struct.unpack_from("<2I", data, 6) == (32, 32)
        assert struct.unpack_from("<dd", data, 14) == (0.75, 0.125)
        assert len(data) == 30 + 32 * 32 * 8

    def test_decode_restores_the_field_exactly(self, checkpoint: Checkpoint) -> None:
        data = encode(checkpoint)
        restored = decode(data)
        assert restored.alpha == checkpoint.alpha
        assert restored.t == checkpoint.t
        assert np.array_equal(restored.samples, checkpoint.samples)
        assert encode(restored) == data

    def test_bad_magic(self, checkpoint: Checkpoint) -> None:
        with pytest.raises(CorruptCheckpointError):
            decode(b"XXXX" + encode(checkpoint)[4:])

    def test_unsupported_version(self, checkpoint: Checkpoint) -> None:
        data = bytearray(encode(checkpoint))
        data[4] = 2
        with pytest.raises(CorruptCheckpointError):
            decode(bytes(data))

    def test_zero_dimensions(self, checkpoint: Checkpoint) -> None:
        data = bytearray(encode(checkpoint))
        data[5] = 0
        with pytest.raises(CorruptCheckpointError):
            decode(bytes(data))

    @pytest.mark.parametrize("keep", [3, 20, -1])
    def test_truncated(self, checkpoint: Checkpoint, keep: int) -> None:
        with pytest.raises(TruncatedCheckpointError):
            decode(encode(checkpoint)[:keep])

    def test_trailing_bytes(self, checkpoint: Checkpoint) -> None:
        with pytest.raises(CorruptCheckpointError):
            decode(encode(checkpoint) + b"\x00")

    def test_non_cubic_samples_are_not_a_snapshot(self) -> None:
        checkpoint = decode(encode(Checkpoint(alpha=1.0, t=0.0, samples=np.zeros((8, 16)))))
        assert checkpoint.shape == (8, 16)
        with pytest.raises(FieldMismatchError):
            checkpoint.to_snapshot()


def test_checkpoint_repository_round_trip(
    tmp_path: Path, checkpoints: CheckpointRepository, checkpoint: Checkpoint, noise: RealField
) -> None:
    path = checkpoints.save(tmp_path / "nested" / "state.sqgf", checkpoint)
    assert path.exists()
    snapshot = checkpoints.load(path).to_snapshot(L=noise.grid.L)
    assert snapshot.t == 0.125
    assert snapshot.field.grid == noise.grid
    assert np.array_equal(snapshot.field.samples, noise.samples)


class TestReportRepository:
    def test_norms_csv(self, tmp_path: Path, reports: ReportRepository, trajectory: Trajectory) -> None:
        path = reports.write_norms(tmp_path / "norms.csv", trajectory.norms)
        raw = path.read_bytes()
        assert raw.startswith(b"t,l2,sup,h_alpha_half\n")
        assert b"\r" not in raw
        rows = reports.read_norms(path)
        assert len(rows) == len(trajectory.norms)
        assert rows[3]["l2"] == trajectory.norms[3].l2
        assert rows[-1]["t"] == trajectory.norms[-1].t

    def test_report_round_trip(self, tmp_path: Path, reports: ReportRepository) -> None:
        report = DiagnosticsReport(kind="constants", parameters={"alpha": 0.75}, results={"r0": 0.00234375})
        path = reports.write_report(tmp_path / "report.json", report)
        assert path.read_text(encoding="utf-8").endswith("}\n")
        assert reports.read_report(path) == report

    def test_report_rejects_nan(self, reports: ReportRepository) -> None:
        with pytest.raises(ValueError):
            reports.dumps(DiagnosticsReport(kind="constants", results={"value": float("nan")}))

    def test_config_hash_ignores_the_output_section(self, run_config: RunConfig) -> None:
        base = ReportRepository.compute_config_hash(run_config)
        renamed = run_config.model_copy(update={"output": run_config.output.model_copy(update={"prefix": "other"})})
        reseeded = run_config.model_copy(update={"seed": 2})
        assert ReportRepository.compute_config_hash(renamed) == base
        assert ReportRepository.compute_config_hash(reseeded) != base
        assert len(base) == 64
