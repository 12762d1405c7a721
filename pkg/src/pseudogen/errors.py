class PseudogenError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(PseudogenError):
    pass


class DatasetError(PseudogenError, ValueError):
    pass


class StageError(PseudogenError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
