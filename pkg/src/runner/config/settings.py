from pydantic_settings import BaseSettings, SettingsConfigDict

from configs import LoggingSettings, OutputSettings, WorkerSettings


class RunnerSettings(BaseSettings):
    output: OutputSettings = OutputSettings()
    log: LoggingSettings = LoggingSettings()
    workers: WorkerSettings = WorkerSettings()

    model_config = SettingsConfigDict(
        env_prefix="SQG_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
        validate_default=True,
        env_nested_delimiter="__",
    )

