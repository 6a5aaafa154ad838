"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A caller-supplied configuration is invalid (unknown engine kind,
    inconsistent dimensions, capability cap exceeded, ...)."""


class HorizonError(RuntimeError):
    """An engine received more samples than its declared horizon."""


class CacheWriteError(RuntimeError):
    """A cache slot would be written after the step that consumed it.

    Guards the write-once property of the schedule-driven engine; by
    construction this is never raised on a correct schedule.
    """


class SequenceFormatError(ValueError):
    """A sequence or bank file failed to parse."""

    def __init__(self, message: str, path: str = "", line: int = 0):
        self.path = path
        self.line = line
        where = f"{path}:{line}: " if path else ""
        super().__init__(f"{where}{message}")
