from dishka import Provider, Scope, from_context, provide

from configs import OutputSettings, WorkerSettings
from runner.config.settings import RunnerSettings


class RunnerConfigProvider(Provider):
    scope = Scope.APP
    config = from_context(RunnerSettings)

    @provide(scope=Scope.APP)
    def get_output_config(self, config: RunnerSettings) -> OutputSettings:
        return config.output

    @provide(scope=Scope.APP)
    def get_worker_config(self, config: RunnerSettings) -> WorkerSettings:
        return config.workers
