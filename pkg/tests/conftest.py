import pathlib

import numpy as np
import pytest

from core.dto import GridSpec, InitialConditionSpec, RealField, SolverConfig, Trajectory
from core.enums import InitialConditionPreset
from core.initial_conditions import make_initial_condition
from core.solver import run
from core.spectral import coordinates
from runner.repositories.checkpoint_repository import CheckpointRepository
from runner.repositories.report_repository import ReportRepository
from runner.schemas import RunConfig

NOISE = {"k_min": 1.0, "k_max": 6.0}


@pytest.fixture
def grid() -> GridSpec:
    return GridSpec(n=2, N=32, alpha=0.75)


@pytest.fixture
def noise(grid: GridSpec) -> RealField:
    spec = InitialConditionSpec(name=InitialConditionPreset.RANDOM_HK, params=NOISE)
    return make_initial_condition(spec, grid, seed=3)


@pytest.fixture
def shear(grid: GridSpec) -> RealField:
    return RealField(grid=grid, samples=np.sin(coordinates(grid)[0]))


@pytest.fixture
def solver_config(grid: GridSpec) -> SolverConfig:
    return SolverConfig(
        grid=grid,
        dt=0.005,
        t_end=0.05,
        ic=InitialConditionSpec(name=InitialConditionPreset.RANDOM_HK, params=NOISE),
        seed=3,
    )


@pytest.fixture
def trajectory(solver_config: SolverConfig) -> Trajectory:
    return run(solver_config)


@pytest.fixture
def run_config(tmp_path: pathlib.Path) -> RunConfig:
    return RunConfig.model_validate(
        {
            "grid": {"n": 2, "N": 32, "alpha": 0.75},
            "dt": 0.02,
            "t_end": 1.0,
            "seed": 1,
            "flow_scale": 0.0,
            "snapshot_every": 5,
            "initial_condition": {"name": "random_hk", "params": NOISE},
            "diagnostics": {
                "shrink": 0.5,
                "k_max": 2,
                "r_start": 1.0,
                "radius": 1.0,
                "levels": [0.0, 0.25],
                "z_ladder": {"z_min": 1e-3, "z_max": 8.0, "levels": 12},
            },
            "output": {"directory": str(tmp_path / "out"), "prefix": "unit"},
        }
    )


@pytest.fixture
def config_file(tmp_path: pathlib.Path, run_config: RunConfig) -> pathlib.Path:
    path = tmp_path / "run.json"
    path.write_text(run_config.model_dump_json(), encoding="utf-8")
    return path


@pytest.fixture
def checkpoints() -> CheckpointRepository:
    return CheckpointRepository()


@pytest.fixture
def reports() -> ReportRepository:
    return ReportRepository()
