import dataclasses
import enum
import math
from pathlib import Path

import numpy as np
import pytest
from pydantic import ValidationError

from core.enums import IntegratorScheme, RecursionOutcome
from core.recursion import RecursionResult
from runner.schemas import DiagnosticsReport, RunConfig, ZLadderConfig, to_payload


class TestRunConfig:
    def test_builds_the_solver_config(self, run_config: RunConfig) -> None:
        cfg = run_config.to_solver_config()
        assert cfg.grid.N == 32
        assert cfg.grid.alpha == 0.75
        assert cfg.dt == 0.02
        assert cfg.flow_scale == 0.0
        assert cfg.scheme is IntegratorScheme.IMEX_EULER
        assert cfg.snapshot_every == 5
        assert cfg.ic.params == {"k_min": 1.0, "k_max": 6.0}

    def test_reads_from_file(self, config_file: Path, run_config: RunConfig) -> None:
        assert RunConfig.from_file(config_file) == run_config

    def test_schema_example_is_valid(self) -> None:
        example = RunConfig.model_config["json_schema_extra"]["example"]
        config = RunConfig.model_validate(example)
        assert config.output.prefix == "rough"

    def test_rejects_unknown_keys(self, run_config: RunConfig) -> None:
        payload = run_config.model_dump(mode="json")
        payload["grid"]["dx"] = 0.1
        with pytest.raises(ValidationError):
            RunConfig.model_validate(payload)

    @pytest.mark.parametrize(("field", "value"), [("N", 48), ("alpha", 0.0), ("n", 4)])
    def test_rejects_bad_grid(self, run_config: RunConfig, field: str, value: float) -> None:
        payload = run_config.model_dump(mode="json")
        payload["grid"][field] = value
        with pytest.raises(ValidationError):
            RunConfig.model_validate(payload)

    def test_rejects_other_schema_versions(self, run_config: RunConfig) -> None:
        payload = run_config.model_dump(mode="json")
        payload["schema_version"] = 2
        with pytest.raises(ValidationError):
            RunConfig.model_validate(payload)

    def test_rho_from_constants(self, run_config: RunConfig) -> None:
        assert run_config.diagnostics.rho_from_constants is None
        diagnostics = run_config.diagnostics.model_copy(update={"c0": 0.6, "a": 1.0})
        assert diagnostics.rho_from_constants == pytest.approx(0.36 / 128)


def test_z_ladder_must_be_ordered() -> None:
    with pytest.raises(ValidationError):
        ZLadderConfig(z_min=2.0, z_max=1.0)
    ladder = ZLadderConfig(z_min=1e-3, z_max=1.0, levels=4).heights()
    assert np.allclose(ladder, [1e-3, 1e-2, 1e-1, 1.0])


class Colour(enum.Enum):
    RED = "red"


@dataclasses.dataclass(frozen=True)
class Sample:
    value: float
    values: np.ndarray

    @property
    def doubled(self) -> float:
        return 2 * self.value


class TestToPayload:
    def test_dataclass_fields_and_properties(self) -> None:
        payload = to_payload(Sample(value=1.5, values=np.array([1.0, np.inf])))
        assert payload == {"value": 1.5, "values": [1.0, None], "doubled": 3.0}

    def test_recursion_result(self) -> None:
        payload = to_payload(RecursionResult(outcome=RecursionOutcome.CONVERGES, steps=4, threshold_epsilon0=0.5))
        assert payload == {"outcome": "converges", "steps": 4, "threshold_epsilon0": 0.5, "converges": True}

    def test_plain_values(self) -> None:
        assert to_payload(Colour.RED) == "red"
        assert to_payload(np.float64(2.5)) == 2.5
        assert to_payload(Path("a") / "b") == str(Path("a") / "b")
        assert to_payload({3, 1, 2}) == [1, 2, 3]
        assert to_payload({"x": (math.nan, 1)}) == {"x": [None, 1]}

    def test_rejects_unknown_objects(self) -> None:
        with pytest.raises(TypeError):
            to_payload(object())


def test_report_forbids_extra_keys() -> None:
    with pytest.raises(ValidationError):
        DiagnosticsReport.model_validate({"kind": "constants", "results": {}, "extra": 1})
