from pathlib import Path

from pydantic import Field
from pydantic.main import BaseModel


class OutputSettings(BaseModel):
    DIR: Path | None = None

    def resolve(self, configured: Path) -> Path:
        """The configured directory unless DIR overrides it."""
        return self.DIR if self.DIR is not None else Path(configured)


class LoggingSettings(BaseModel):
    LEVEL: str = "INFO"


class WorkerSettings(BaseModel):
    JOBS: int = Field(1, ge=1)
