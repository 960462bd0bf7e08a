"""Contains all custom exceptions raised by specprep."""

from pathlib import Path
from typing import Optional, Union

from click import ClickException


class SpecprepError(ClickException):
    """The base exception for any error originating from the specprep project."""


class MatrixParseError(SpecprepError):
    """Raised when a feature matrix CSV file cannot be parsed."""

    def __init__(
        self,
        path: Union[str, Path],
        details: str,
        row: Optional[str] = None,
        column: Optional[str] = None,
    ):
        if not isinstance(path, str):
            path = str(path)
        location = ""
        if row is not None:
            location += f" row `{row}`"
        if column is not None:
            location += f" column `{column}`"
        super().__init__(f"Unable to parse `{path}`{location}: {details.strip()}")
        self.path = path
        self.row = row
        self.column = column


class MatrixValidationError(SpecprepError):
    """Raised when a feature matrix violates its structural invariants."""


class ConfigError(SpecprepError):
    """Raised when a configuration record or file is invalid."""

    def __init__(self, source: Union[str, Path], details: str = ""):
        if not isinstance(source, str):
            source = str(source)
        super().__init__(f"Invalid configuration in {source}! {details.strip()}")
        self.source = source
        self.details = details


class TransformError(SpecprepError):
    """Raised when a transform cannot be applied to a feature matrix."""

    def __init__(self, kind: str, details: str):
        super().__init__(f"{kind}: {details.strip()}")
        self.kind = kind
        self.details = details


class PipelineStepError(SpecprepError):
    """Raised when a step of a transform pipeline fails; wraps the step's own error."""

    def __init__(self, index: int, kind: str, cause: SpecprepError):
        super().__init__(f"Pipeline step {index} ({kind}) failed: {cause.format_message()}")
        self.index = index
        self.kind = kind
        self.cause = cause


class DesignError(SpecprepError):
    """Raised for invalid rosters, plate assignments or randomization requests."""


class FitError(SpecprepError):
    """Raised when a model cannot be fitted to the supplied data."""


class SimulationError(SpecprepError):
    """Raised when a power simulation is misconfigured."""


class OutputError(SpecprepError):
    """Raised when a result file cannot be written."""

    def __init__(self, path: Union[str, Path], details: str = ""):
        if not isinstance(path, str):
            path = str(path)
        super().__init__(f"Unable to write `{path}`! {details.strip()}")
        self.path = path
