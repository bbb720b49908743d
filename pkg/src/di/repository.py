from dishka import Provider, Scope, provide

from runner.repositories.checkpoint_repository import CheckpointRepository
from runner.repositories.report_repository import ReportRepository


class RepositoryProvider(Provider):
    @provide(scope=Scope.APP)
    def create_checkpoint_repository(self) -> CheckpointRepository:
        return CheckpointRepository()

    @provide(scope=Scope.APP)
    def create_report_repository(self) -> ReportRepository:
        return ReportRepository()
