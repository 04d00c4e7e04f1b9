"""Exception hierarchy shared across the package."""


class TenetError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(TenetError):
    """Invalid or inconsistent run configuration."""


class SchemaError(TenetError):
    """Input file is missing required columns or has an unusable layout."""


class RowError(TenetError):
    """One or more input rows failed to parse or violated a field invariant."""

    def __init__(self, message: str, rows: list[tuple[int, str]] | None = None):
        super().__init__(message)
        # (line_number, reason) pairs, 1-based including the header line
        self.rows = rows or []


class IntegrityError(TenetError):
    """Duplicate keys or other structural violations in the panel."""


class SampleSizeError(TenetError):
    """Too few effective observations for the requested estimate."""


class DegenerateSeriesError(TenetError):
    """Series has zero entropy (all values identical) or zero variance."""


class StageFailure(TenetError):
    """A pipeline stage aborted; carries the stage name and root cause."""

    def __init__(self, message: str, stage: str = "", cause: BaseException | None = None):
        super().__init__(message)
        self.stage = stage
        self.cause = cause
