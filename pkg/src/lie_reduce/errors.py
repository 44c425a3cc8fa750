"""Exception hierarchy shared by the symbolic and numeric layers."""


class LieReduceError(Exception):
    """Base class for every error raised by this package."""


class ParseError(LieReduceError):
    def __init__(self, message, column):
        super().__init__(f"{message} at column {column}")
        self.column = column


class UnknownSymbolError(ParseError):
    pass


class UnsupportedFormError(LieReduceError):
    """Expression lies outside the class the canonicalizer handles."""


class NotAffineError(LieReduceError):
    pass


class ZeroCoefficientError(LieReduceError):
    pass


class TruncationError(LieReduceError):
    """A total derivative would leave the stored jet."""


class ClosureError(LieReduceError):
    def __init__(self, pair, message=None):
        self.pair = pair
        super().__init__(message or f"bracket [{pair[0]}, {pair[1]}] is not in the span of the basis")


class SpanError(LieReduceError):
    pass


class SeriesClosureError(LieReduceError):
    """The adjoint series could not be summed in closed form.

    ``truncated`` holds the order-8 partial sum so callers can still inspect it.
    """

    def __init__(self, message, truncated=None):
        super().__init__(message)
        self.truncated = truncated


class ClassificationUnsupported(LieReduceError):
    pass


class DegenerateClassError(LieReduceError):
    pass


class NoAnsatzError(LieReduceError):
    pass


class ReductionFailure(LieReduceError):
    pass


class SubstitutionInvalid(LieReduceError):
    pass


class IntegrationAbort(LieReduceError):
    def __init__(self, message, location):
        super().__init__(f"{message} (at z={location!r})")
        self.location = location


class GridError(LieReduceError):
    pass


class FixtureError(LieReduceError):
    pass
