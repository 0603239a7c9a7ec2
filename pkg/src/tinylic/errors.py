"""Exception hierarchy for the tinylic codec."""


class TinylicError(Exception):
    """Base class for all tinylic errors."""


class ShapeError(TinylicError):
    """Array shapes or dimensions violate an operation's contract."""


class ConfigError(TinylicError):
    """Invalid model or kernel configuration."""


class InputError(TinylicError):
    """Input values violate an operation's precondition."""


class FormatError(TinylicError):
    """A serialized container (bitstream or weight file) is malformed."""


class CorruptStreamError(FormatError):
    """An entropy-coded stream is truncated or internally inconsistent."""


class WeightLoadError(FormatError):
    """A weight file does not match the expected parameter set."""


class SchedulingError(TinylicError):
    """Context-model schedule violated; indicates a programming bug."""
