"""Schemas for run configurations and diagnostic reports."""

import dataclasses
import enum
import math
from pathlib import Path
from typing import Any, Literal

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from core.dto import GridSpec, InitialConditionSpec, SolverConfig
from core.enums import InitialConditionPreset, IntegratorScheme, MultiplierMethod
from core.extension import DEFAULT_LADDER, default_ladder
from core.recursion import DEFAULT_K_MAX, RecursionSpec


class GridConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n: int = Field(2, ge=1, le=3, description="Spatial dimension")
    N: int = Field(128, ge=8, description="Nodes per axis, a power of two")
    L: float = Field(2 * math.pi, gt=0, description="Period of the torus along every axis")
    alpha: float = Field(..., gt=0, le=2, description="Dissipation order of Lambda^alpha")

    @field_validator("N")
    @classmethod
    def _power_of_two(cls, value: int) -> int:
        if value & (value - 1) != 0:
            raise ValueError(f"N must be a power of two, got {value}")
        return value

    def to_grid(self) -> GridSpec:
        return GridSpec(n=self.n, N=self.N, L=self.L, alpha=self.alpha)


class InitialConditionConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: InitialConditionPreset = Field(..., description="Initial-condition preset")
    params: dict[str, float] = Field(default_factory=dict, description="Preset parameters, e.g. k_min, k_max")

    def to_spec(self) -> InitialConditionSpec:
        return InitialConditionSpec(name=self.name, params=dict(self.params))


class ZLadderConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    z_min: float = Field(DEFAULT_LADDER[0], gt=0, description="Lowest height of the geometric ladder")
    z_max: float = Field(DEFAULT_LADDER[1], gt=0, description="Highest height of the geometric ladder")
    levels: int = Field(int(DEFAULT_LADDER[2]), ge=3, description="Number of heights")
    method: MultiplierMethod = Field(MultiplierMethod.BESSEL, description="Extension multiplier evaluation")

    @model_validator(mode="after")
    def _ordered(self) -> "ZLadderConfig":
        if not self.z_min < self.z_max:
            raise ValueError(f"z_min must be below z_max, got ({self.z_min}, {self.z_max})")
        return self

    def heights(self) -> NDArray[np.float64]:
        return default_ladder(self.z_min, self.z_max, self.levels)


class RecursionConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    C: float = Field(1.0, gt=0, description="Growth constant of A_k = C^k A_{k-3}^beta")
    beta: float = Field(2.0, gt=1, description="Superlinear exponent")
    seed: tuple[float, float, float] = Field((0.5, 0.5, 0.5), description="A_0, A_1, A_2")
    k_max: int = Field(DEFAULT_K_MAX, ge=3, description="Iterations before a run is unclassified")

    def to_spec(self) -> RecursionSpec:
        return RecursionSpec(C=self.C, beta=self.beta, seed=self.seed, k_max=self.k_max)


class DiagnosticsConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    c0: float | None = Field(None, gt=0, lt=1, description="Shrink constant c0 of the oscillation lemma")
    a: float | None = Field(None, gt=0, description="Width a of the time window in the second lemma")
    shrink: float = Field(0.5, gt=0, lt=1, description="Cylinder shrink factor rho")
    k_max: int = Field(6, ge=0, description="Deepest cylinder level of the oscillation sequence")
    r_start: float = Field(1.0, gt=0, description="Radius of the outermost cylinder")
    t_anchor: float | None = Field(None, gt=0, description="Cylinder anchor time, defaults to the final time")
    center: list[float] | None = Field(None, description="Cylinder centre, defaults to the origin")
    radius: float = Field(1.0, gt=0, description="Cylinder radius for level sets and the isoperimetric slice")
    levels: list[float] = Field(default_factory=lambda: [0.0], description="Truncation levels of the energy check")
    energy_cap: float = Field(0.0, ge=0, description="Lower cap of the isoperimetric constant")
    extended: bool = Field(False, description="Measure oscillations on theta* instead of theta")
    second_lemma: bool = Field(False, description="Evaluate the second-lemma bound on Q_4*")
    m: float = Field(0.1, gt=0, description="Exponent factor of the second-lemma bound")
    decay_window: tuple[float, float] = Field((0.02, 0.5), description="Fit window of the decay exponent")
    z_ladder: ZLadderConfig = Field(default_factory=ZLadderConfig)
    recursion: RecursionConfig = Field(default_factory=RecursionConfig)

    @property
    def rho_from_constants(self) -> float | None:
        """c0^2 a / 128 when both constants are given."""
        if self.c0 is None or self.a is None:
            return None
        return self.c0**2 * self.a / 128


class OutputConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    directory: Path = Field(Path("output"), description="Directory for CSV, checkpoints and reports")
    prefix: str = Field("run", min_length=1, description="File name prefix")
    checkpoints: bool = Field(True, description="Write a checkpoint for every snapshot, not only the last")


class RunConfig(BaseModel):
    """A solver run plus the parameters of the diagnostics computed on it."""

    model_config = ConfigDict(
        extra="forbid",
        json_schema_extra={
            "example": {
                "schema_version": 1,
                "grid": {"n": 2, "N": 128, "alpha": 0.75},
                "dt": 0.002,
                "t_end": 1.0,
                "seed": 7,
                "flow_scale": 0.0,
                "snapshot_every": 10,
                "initial_condition": {"name": "random_hk", "params": {"k_min": 1, "k_max": 8}},
                "diagnostics": {"shrink": 0.5, "k_max": 4, "levels": [0.0, 0.25, 0.5]},
                "output": {"directory": "output", "prefix": "rough"},
            }
        },
    )

    schema_version: Literal[1] = Field(1, description="Version of this schema")
    grid: GridConfig
    dt: float = Field(..., gt=0, description="Time step")
    t_end: float = Field(..., ge=0, description="Final time")
    seed: int = Field(0, ge=0, description="Seed of the initial condition")
    flow_scale: float = Field(1.0, ge=0, le=1, description="Advection coefficient, 0 for the linear flow")
    scheme: IntegratorScheme = Field(IntegratorScheme.IMEX_EULER, description="Time integrator")
    energy_projection: bool = Field(False, description="Clip the energy of every advective step to the incoming one")
    snapshot_every: int = Field(1, ge=1, description="Steps between stored snapshots")
    initial_condition: InitialConditionConfig
    diagnostics: DiagnosticsConfig = Field(default_factory=DiagnosticsConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)

    def to_solver_config(self) -> SolverConfig:
        return SolverConfig(
            grid=self.grid.to_grid(),
            dt=self.dt,
            t_end=self.t_end,
            ic=self.initial_condition.to_spec(),
            seed=self.seed,
            flow_scale=self.flow_scale,
            scheme=self.scheme,
            energy_projection=self.energy_projection,
            snapshot_every=self.snapshot_every,
        )

    @classmethod
    def from_file(cls, path: Path) -> "RunConfig":
        return cls.model_validate_json(Path(path).read_text(encoding="utf-8"))


class DiagnosticsReport(BaseModel):
    model_config = ConfigDict(extra="forbid")

    schema_version: Literal[1] = Field(1, description="Version of the report schema")
    kind: str = Field(..., description="What produced the report, e.g. 'oscillation' or 'constants'")
    parameters: dict[str, Any] = Field(default_factory=dict, description="Inputs the results depend on")
    results: Any = Field(..., description="Diagnostic output, plain JSON values only")


def to_payload(value: Any) -> Any:
    """
    Plain JSON values for dataclasses, enums, numpy values and paths.

    Dataclasses contribute their fields and their properties; non-finite floats become None.
    """
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        payload = {field.name: to_payload(getattr(value, field.name)) for field in dataclasses.fields(value)}
        for klass in reversed(type(value).__mro__):
            for name, attribute in vars(klass).items():
                if isinstance(attribute, property) and not name.startswith("_"):
                    payload[name] = to_payload(getattr(value, name))
        return payload
    if isinstance(value, BaseModel):
        return to_payload(value.model_dump(mode="python"))
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, np.ndarray):
        return [to_payload(item) for item in value.tolist()]
    if isinstance(value, np.generic):
        return to_payload(value.item())
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, dict):
        return {str(key): to_payload(item) for key, item in value.items()}
    if isinstance(value, list | tuple | set | frozenset):
        items = sorted(value) if isinstance(value, set | frozenset) else value
        return [to_payload(item) for item in items]
    if isinstance(value, bool) or value is None or isinstance(value, int | str):
        return value
    if isinstance(value, float):
        return value if math.isfinite(value) else None
    raise TypeError(f"cannot serialize {type(value).__name__}")
