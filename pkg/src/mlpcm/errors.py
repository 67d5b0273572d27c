class PcmError(Exception):
    """Base class for errors raised by this package."""


class DomainError(PcmError, ValueError):
    pass


class ConfigError(PcmError, ValueError):
    pass


class TraceParseError(PcmError, ValueError):
    def __init__(self, message: str, line: int | None = None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"line {line}: "
        elif where:
            where += " "
        super().__init__(f"{where}{message}")


class EncodingError(PcmError, ValueError):
    def __init__(self, feature: str, value, categories):
        self.feature = feature
        self.value = value
        super().__init__(f"{feature}: value {value!r} not in categories {list(categories)}")


class ShapeError(PcmError, ValueError):
    pass


class TrainingError(PcmError, RuntimeError):
    def __init__(self, message: str, epoch: int, batch: int, head: str):
        self.epoch = epoch
        self.batch = batch
        self.head = head
        super().__init__(f"{message} (epoch {epoch}, batch {batch}, head {head})")
