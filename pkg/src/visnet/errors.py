"""Exception hierarchy. The CLI maps each family onto an exit code."""


class VisnetError(Exception):
    exit_code = 1


class ConfigError(VisnetError):
    exit_code = 2


class DataError(VisnetError):
    exit_code = 3


class ParseError(DataError):
    pass


class ShapeError(DataError):
    pass


class PreconditionError(DataError):
    pass


class LabelError(DataError):
    pass


class DegenerateChannelError(DataError):
    def __init__(self, channel, message=None):
        self.channel = channel
        super().__init__(message or f"channel {channel!r} has zero variance")


class InsufficientDataError(DataError):
    pass


class SpecError(ConfigError):
    pass


class NumericalError(VisnetError):
    exit_code = 4


class NumericalDegeneracyError(NumericalError):
    def __init__(self, index, message=None):
        self.index = index
        super().__init__(message or f"non-positive precision diagonal at index {index}")


class OracleInapplicableError(NumericalError):
    pass


class OracleBoundError(NumericalError):
    pass


class DivergenceError(NumericalError):
    pass
