from dishka import Provider, Scope, provide

from configs import OutputSettings, WorkerSettings
from runner.repositories.checkpoint_repository import CheckpointRepository
from runner.repositories.report_repository import ReportRepository
from runner.services.constants_service import ConstantsService
from runner.services.diagnostics_service import DiagnosticsService
from runner.services.extension_service import ExtensionService
from runner.services.simulation_service import SimulationService
from runner.services.verification_service import VerificationService


class ServiceProvider(Provider):
    @provide(scope=Scope.REQUEST)
    def get_simulation_service(
        self, checkpoints: CheckpointRepository, reports: ReportRepository, output: OutputSettings
    ) -> SimulationService:
        return SimulationService(checkpoints=checkpoints, reports=reports, output=output)

    @provide(scope=Scope.REQUEST)
    def get_extension_service(
        self, checkpoints: CheckpointRepository, reports: ReportRepository, output: OutputSettings
    ) -> ExtensionService:
        return ExtensionService(checkpoints=checkpoints, reports=reports, output=output)

    @provide(scope=Scope.REQUEST)
    def get_diagnostics_service(
        self,
        simulation: SimulationService,
        checkpoints: CheckpointRepository,
        reports: ReportRepository,
        output: OutputSettings,
    ) -> DiagnosticsService:
        return DiagnosticsService(simulation=simulation, checkpoints=checkpoints, reports=reports, output=output)

    @provide(scope=Scope.REQUEST)
    def get_constants_service(
        self, reports: ReportRepository, output: OutputSettings, workers: WorkerSettings
    ) -> ConstantsService:
        return ConstantsService(reports=reports, output=output, workers=workers)

    @provide(scope=Scope.REQUEST)
    def get_verification_service(
        self, reports: ReportRepository, output: OutputSettings, workers: WorkerSettings
    ) -> VerificationService:
        return VerificationService(reports=reports, output=output, workers=workers)
