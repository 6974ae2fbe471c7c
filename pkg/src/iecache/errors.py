"""Exception hierarchy shared across modules."""


class IECacheError(Exception):
    pass


class TransportError(IECacheError):
    """Network or HTTP failure after the retry budget was spent."""


class AuthMissing(IECacheError):
    pass


class FixtureExhausted(IECacheError):
    pass


class FixtureParseError(IECacheError):
    def __init__(self, message: str, line: int | None = None, position: int | None = None):
        self.line = line
        self.position = position
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", pos {position}" if position is not None else "") + ")"
        super().__init__(message + where)


class SchemaParseError(IECacheError):
    pass


class SchemaNotFound(IECacheError, FileNotFoundError):
    pass


class RecordParseError(IECacheError):
    pass


class MalformedAction(IECacheError):
    pass


class DatasetFormatError(IECacheError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class DuplicateId(DatasetFormatError):
    pass


class AdapterError(IECacheError):
    def __init__(self, message: str, record_id: str | None = None):
        self.record_id = record_id
        super().__init__(f"[{record_id}] {message}" if record_id is not None else message)


class ValidationError(IECacheError):
    """Raised by the trace validator; ``violations`` lists every failed check."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class RunAborted(IECacheError):
    """A run stopped on a gateway error; ``trace`` holds the steps completed so far."""

    def __init__(self, cause: Exception, trace):
        self.cause = cause
        self.trace = trace
        super().__init__(f"run aborted: {cause}")
