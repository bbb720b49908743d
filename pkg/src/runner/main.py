"""Command-line entry point: simulate, extend, diagnose, constants, decay and verify."""

import argparse
import asyncio
import json
import logging
import math
import sys
from collections.abc import Awaitable, Callable, Sequence
from pathlib import Path

from dishka import AsyncContainer
from dishka.async_container import make_async_container
from pydantic import ValidationError

from configs import OutputSettings
from core.enums import DiagnoseKind, MultiplierMethod, VerifySuite
from core.exceptions import CheckpointError, NumericalFailure, ValidationFailure
from core.extension import DEFAULT_LADDER
from core.verification import SuiteParameters
from di.config import RunnerConfigProvider
from di.repository import RepositoryProvider
from di.service import ServiceProvider
from logger import init_logging
from runner.config.settings import RunnerSettings
from runner.repositories.report_repository import ReportRepository
from runner.schemas import DiagnosticsReport, RunConfig, ZLadderConfig
from runner.services.constants_service import ConstantsService
from runner.services.diagnostics_service import DiagnosticsService
from runner.services.extension_service import ExtensionService
from runner.services.simulation_service import SimulationService
from runner.services.verification_service import VerificationService, format_table

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2

Handler = Callable[[AsyncContainer, argparse.Namespace], Awaitable[int]]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="Print reports and errors as JSON")
    common.add_argument("--verbose", action="store_true", help="Log at DEBUG level")
    common.add_argument("--output-dir", type=Path, default=None, help="Override the output directory")

    parser = argparse.ArgumentParser(prog="sqg-verify", description=__doc__)
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser("simulate", parents=[common], help="Run the solver and write norms and checkpoints")
    simulate.add_argument("--config", type=Path, required=True, help="Run configuration (JSON)")

    extend = commands.add_parser("extend", parents=[common], help="Write theta* on a z-ladder for a checkpoint")
    extend.add_argument("--checkpoint", type=Path, required=True, help="Checkpoint of theta")
    extend.add_argument("--length", type=float, default=2 * math.pi, help="Period L of the checkpointed grid")
    extend.add_argument("--z-min", type=float, default=DEFAULT_LADDER[0])
    extend.add_argument("--z-max", type=float, default=DEFAULT_LADDER[1])
    extend.add_argument("--levels", type=int, default=int(DEFAULT_LADDER[2]))
    extend.add_argument("--method", choices=[m.value for m in MultiplierMethod], default=MultiplierMethod.BESSEL.value)

    diagnose = commands.add_parser("diagnose", parents=[common], help="Write a De Giorgi diagnostics report")
    diagnose.add_argument("kind", choices=[k.value for k in DiagnoseKind])
    diagnose.add_argument("--config", type=Path, required=True, help="Run configuration (JSON)")
    diagnose.add_argument("--checkpoint", type=Path, default=None, help="Use this field instead of running")

    constants = commands.add_parser("constants", parents=[common], help="Derive and audit the constants ledger")
    constants.add_argument("--alpha", type=float, default=None)
    constants.add_argument("--c0", type=float, default=None)
    constants.add_argument("--alpha0", type=float, default=None)
    constants.add_argument("--barrier", action="store_true", help="Take lambda from the barrier quadrature")
    constants.add_argument("--sweep", type=float, nargs="+", default=None, help="Alphas to sweep at window midpoints")
    constants.add_argument("--jobs", type=int, default=None, help="Concurrent alphas in a sweep")

    decay = commands.add_parser("decay", parents=[common], help="Fit the sup-norm decay exponent")
    decay.add_argument("--config", type=Path, required=True, help="Run configuration (JSON)")
    decay.add_argument("--window", type=float, nargs=2, default=None, metavar=("T_A", "T_B"))

    verify = commands.add_parser("verify", parents=[common], help="Run verification suites")
    verify.add_argument("suite", choices=[s.value for s in VerifySuite])
    verify.add_argument("--alpha", type=float, default=0.8)
    verify.add_argument("--n", type=int, default=128, help="Nodes per axis")
    verify.add_argument("--samples", type=int, default=5, help="Random fields or runs per suite")
    verify.add_argument("--t-end", type=float, default=0.25, help="Final time of the nonlinear runs")
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--jobs", type=int, default=None, help="Concurrent suites")
    return parser


def _print_report(args: argparse.Namespace, report: DiagnosticsReport, path: Path) -> None:
    if args.json:
        sys.stdout.write(ReportRepository.dumps(report))
    else:
        print(f"{report.kind} report written to {path}")


async def _simulate(container: AsyncContainer, args: argparse.Namespace) -> int:
    config = RunConfig.from_file(args.config)
    service = await container.get(SimulationService)
    outcome = await service.simulate(config)
    if args.json:
        sys.stdout.write(outcome.report_path.read_text(encoding="utf-8"))
    else:
        print(f"norms written to {outcome.norms_path}, report {outcome.report_path}")
    return EXIT_OK


async def _extend(container: AsyncContainer, args: argparse.Namespace) -> int:
    ladder = ZLadderConfig(z_min=args.z_min, z_max=args.z_max, levels=args.levels, method=MultiplierMethod(args.method))
    service = await container.get(ExtensionService)
    outcome = await service.extend(args.checkpoint, args.length, ladder, args.output_dir)
    if args.json:
        sys.stdout.write(outcome.report_path.read_text(encoding="utf-8"))
    else:
        print(f"{len(outcome.level_paths)} levels written, report {outcome.report_path}")
    return EXIT_OK


async def _diagnose(container: AsyncContainer, args: argparse.Namespace) -> int:
    config = RunConfig.from_file(args.config)
    service = await container.get(DiagnosticsService)
    report, path = await service.diagnose(DiagnoseKind(args.kind), config, args.checkpoint)
    _print_report(args, report, path)
    return EXIT_OK


async def _constants(container: AsyncContainer, args: argparse.Namespace) -> int:
    service = await container.get(ConstantsService)
    if args.sweep is not None:
        report, path = await service.sweep(args.sweep, args.alpha0, args.barrier, args.jobs, args.output_dir)
    else:
        if args.alpha is None or args.c0 is None:
            raise ValidationFailure("constants needs --alpha and --c0, or --sweep")
        report, path = await service.ledger(args.alpha, args.c0, args.alpha0, args.barrier, args.output_dir)
    _print_report(args, report, path)
    return EXIT_OK


async def _decay(container: AsyncContainer, args: argparse.Namespace) -> int:
    config = RunConfig.from_file(args.config)
    service = await container.get(DiagnosticsService)
    window = (args.window[0], args.window[1]) if args.window is not None else None
    report, path = await service.decay(config, window)
    _print_report(args, report, path)
    return EXIT_OK


async def _verify(container: AsyncContainer, args: argparse.Namespace) -> int:
    params = SuiteParameters(alpha=args.alpha, N=args.n, samples=args.samples, t_end=args.t_end, seed=args.seed)
    service = await container.get(VerificationService)
    results, path = await service.verify(VerifySuite(args.suite), params, args.jobs, args.output_dir)
    passed = all(result.passed for result in results)
    if args.json:
        sys.stdout.write(path.read_text(encoding="utf-8"))
    else:
        print(format_table(results))
        print(f"{'all checks passed' if passed else 'some checks failed'}, report {path}")
    return EXIT_OK if passed else EXIT_NUMERICAL


HANDLERS: dict[str, Handler] = {
    "simulate": _simulate,
    "extend": _extend,
    "diagnose": _diagnose,
    "constants": _constants,
    "decay": _decay,
    "verify": _verify,
}


def _exit_code(error: Exception) -> int | None:
    if isinstance(error, NumericalFailure):
        return EXIT_NUMERICAL
    if isinstance(error, ValidationError | ValueError | FileNotFoundError | CheckpointError):
        return EXIT_VALIDATION
    return None


def _report_error(args: argparse.Namespace, error: Exception, code: int) -> None:
    if args.json:
        payload = {"error": type(error).__name__, "message": str(error), "exit_code": code}
        sys.stderr.write(json.dumps(payload) + "\n")
    else:
        sys.stderr.write(f"error: {error}\n")


async def _run(args: argparse.Namespace) -> int:
    settings = RunnerSettings()
    init_logging(logging.DEBUG if args.verbose else settings.log.LEVEL)
    if args.output_dir is not None:
        settings = settings.model_copy(update={"output": OutputSettings(DIR=args.output_dir)})
    container = make_async_container(
        RunnerConfigProvider(),
        RepositoryProvider(),
        ServiceProvider(),
        context={RunnerSettings: settings},
    )
    try:
        async with container() as request_container:
            return await HANDLERS[args.command](request_container, args)
    finally:
        await container.close()


def cli_dispatch(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return asyncio.run(_run(args))
    except Exception as e:
        code = _exit_code(e)
        if code is None:
            raise
        _report_error(args, e, code)
        return code


def main() -> None:
    sys.exit(cli_dispatch())


if __name__ == "__main__":
    main()
