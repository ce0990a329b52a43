"""Exception hierarchy shared by every sinet module."""


class SinetError(Exception):
    """Base class for all sinet errors."""


class DimensionError(SinetError, ValueError):
    """Operand shapes are inconsistent."""


class RankError(DimensionError):
    """An operation received a tensor of the wrong rank."""


class EmptyInputError(SinetError, ValueError):
    """A sequence, batch or collection that must be non-empty was empty."""


class NumericError(SinetError, ArithmeticError):
    """A non-finite value appeared where finite values are required."""


class EncodingError(SinetError, ValueError):
    """A string cannot be one-hot encoded or a matrix cannot be decoded."""


class SequenceOverflowError(EncodingError):
    """A string is longer than the encoder's fixed length."""


class UnknownCharacterError(EncodingError):
    """A string contains a character absent from the vocabulary."""

    def __init__(self, char, offset, string):
        self.char = char
        self.offset = offset
        self.string = string
        super().__init__(f"unknown character {char!r} at offset {offset} in {string!r}")


class ConfigError(SinetError, ValueError):
    """Invalid model or training configuration."""


class UsageError(SinetError, ValueError):
    """Inputs do not match what the model variant expects."""


class FormatError(SinetError, ValueError):
    """A checkpoint file is malformed."""

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)


class CorruptionError(FormatError):
    """A checkpoint's contents disagree with its own header or checksum."""


class CompatibilityError(SinetError, ValueError):
    """Encoded data does not match a model's vocabularies or sequence lengths."""


class DataError(SinetError, ValueError):
    """A dataset file or record is invalid."""


class SplitError(DataError):
    """A dataset cannot be split as requested."""


class MapeUndefinedError(SinetError, ValueError):
    """MAPE is undefined because some target is (numerically) zero.

    ``partial`` carries the metrics that could still be computed.
    """

    def __init__(self, message, partial):
        self.partial = partial
        super().__init__(message)
