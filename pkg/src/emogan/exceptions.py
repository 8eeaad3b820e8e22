"""Exception types raised across the package."""


class DimensionError(ValueError):
    """Operands have incompatible shapes."""


class DegenerateTargetError(ValueError):
    """A cosine target vector has (near) zero norm."""


class DictionaryError(ValueError):
    """Malformed emoticon dictionary."""


class DuplicateEmoticonError(DictionaryError):
    def __init__(self, emoticon, first, second):
        self.emoticon = emoticon
        self.classes = (first, second)
        super().__init__(
            f"emoticon {emoticon!r} listed under both {first!r} and {second!r}"
        )


class DatasetFormatError(ValueError):
    """A JSON-lines file could not be parsed. Carries the 1-based line number."""

    def __init__(self, path, lineno, message):
        self.path = path
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {message}")


class ProviderError(RuntimeError):
    """An embedding provider failed for a given sentence."""


class ProtocolError(ValueError):
    """Gold labels that the top-2 protocol cannot score."""


class NumericalError(FloatingPointError):
    """A loss or parameter became non-finite during training."""
