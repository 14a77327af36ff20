"""Exception types shared across the package."""


class NeurodecodeError(Exception):
    """Base class for errors raised by this package."""


class FormatError(NeurodecodeError):
    """A data file does not match its declared format."""


class VocabularyError(NeurodecodeError):
    """A stimulus word is unknown, missing, or out of vocabulary."""


class DivergenceError(NeurodecodeError):
    """Training produced a non-finite loss or parameters."""
