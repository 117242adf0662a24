"""Exception hierarchy shared by all symed modules."""


class SymedError(Exception):
    """Base class for every error raised by symed."""


class StreamCorruptionError(SymedError, ValueError):
    """A stream value is not a finite number."""


class DegenerateVarianceError(SymedError, ArithmeticError):
    pass


class InvalidInputError(SymedError, ValueError):
    pass


class ConfigError(SymedError, ValueError):
    pass


class ProtocolError(SymedError):
    """Frames arrived in an order the receiver cannot accept."""


class FramingError(ProtocolError):
    """Bytes on the wire do not decode to a valid frame."""


class CorruptStateError(SymedError):
    pass


class DatasetError(SymedError, ValueError):
    pass
