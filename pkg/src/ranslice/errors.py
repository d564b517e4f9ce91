"""Exception hierarchy shared by all ranslice modules."""


class RansliceError(Exception):
    """Base class for every error raised by ranslice."""


class ParseError(RansliceError):
    def __init__(self, line, message):
        super().__init__(f"line {line}: {message}")
        self.line = line


class DuplicateBsId(RansliceError):
    pass


class EmptyTopology(RansliceError):
    pass


class InvalidThreshold(RansliceError):
    pass


class InvalidRequest(RansliceError):
    pass


class InsufficientCapacity(RansliceError):
    pass


class PolicyInvariantViolation(RansliceError):
    pass


class InstanceTooLarge(RansliceError):
    pass


class GridGraphMismatch(RansliceError):
    pass


class EmptyInput(RansliceError):
    pass


class ConfigError(RansliceError):
    pass
