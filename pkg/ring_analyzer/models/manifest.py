"""Self-describing output metadata."""

try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):  # type: ignore[no-redef]
        __str__ = str.__str__
        __format__ = str.__format__
from typing import Any

from pydantic import BaseModel, ConfigDict, Field


class Subcommand(StrEnum):
    """CLI subcommands."""

    MOMENTS = "moments"
    LIMITS = "limits"
    DISTRIBUTION = "distribution"
    CONVERGENCE = "convergence"
    OPTIMIZE = "optimize"
    SCAN = "scan"
    SIMULATE = "simulate"
    VALIDATE = "validate"


class OutputFormat(StrEnum):
    """Emitted table format."""

    CSV = "csv"
    JSON = "json"


class RunManifest(BaseModel):
    """Echo of the invocation written at the top of every output."""

    model_config = ConfigDict(frozen=True)

    subcommand: Subcommand
    parameters: dict[str, Any] = Field(default_factory=dict)
    output_path: str | None = Field(default=None, description="None means stdout")
    format: OutputFormat = OutputFormat.CSV
    seed: int | None = Field(default=None, ge=0, lt=2**64)
    version: str

    def to_argv(self) -> list[str]:
        """Rebuild the command line that produced this manifest."""
        argv = [self.subcommand.value, "--format", self.format.value]
        if self.seed is not None:
            argv += ["--seed", str(self.seed)]
        for key, value in self.parameters.items():
            flag = "--" + key.replace("_", "-")
            if isinstance(value, bool):
                if value:
                    argv.append(flag)
            elif value is not None:
                argv += [flag, str(value)]
        return argv
