class NlabError(Exception):
    """Base class for every error raised by nlab."""


class InvalidPatternError(NlabError, ValueError):
    pass


class InvalidStarredPatternError(InvalidPatternError):
    pass


class InvalidMeasureError(NlabError, ValueError):
    pass


class MeasureMismatchError(NlabError, ValueError):
    """Two objects disagree on base, block width or weights."""


class UnsupportedConstructionError(NlabError, ValueError):
    pass


class SelectionError(NlabError, ValueError):
    pass


class MemoryBudgetError(NlabError, ValueError):
    pass


class SpecSyntaxError(NlabError, ValueError):
    """A textual spec failed to parse; ``position`` is the 0-based column of the offending token."""

    def __init__(self, message: str, text: str = "", position: int = 0):
        self.text = text
        self.position = position
        if text:
            message = f"{message} at column {position}: {text!r}"
        super().__init__(message)


class StreamFormatError(NlabError, ValueError):
    pass


class ParameterError(NlabError, ValueError):
    pass
