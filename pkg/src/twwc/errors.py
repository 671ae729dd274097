"""Exception types raised across the package."""


class TwwcError(Exception):
    """Base class for all errors raised by :mod:`twwc`."""


class ParseError(TwwcError, ValueError):
    """Malformed input document or inequality text.

    ``line`` and ``column`` are 1-based when known.
    """

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "")
            message = f"{where}: {message}"
        super().__init__(message)


class DimensionError(TwwcError, ValueError):
    pass


class StochasticityError(TwwcError, ValueError):
    pass


class UnknownCoordinate(TwwcError, KeyError):
    pass


class DegenerateSupport(TwwcError, ValueError):
    pass


class SplitInfeasible(TwwcError, ValueError):
    pass


class EmptyGrid(TwwcError, ValueError):
    pass


class InfeasibleBundle(TwwcError, ValueError):
    pass


class BudgetExceeded(TwwcError, RuntimeError):
    pass


class DuplicateSymbol(TwwcError, ValueError):
    pass


class UnsupportedMinMaxDirection(TwwcError, ValueError):
    pass


class NonPrimeField(TwwcError, ValueError):
    pass


class ZeroCoefficient(TwwcError, ValueError):
    pass


class AlphabetMismatch(TwwcError, ValueError):
    pass


class InnerCodeFailure(TwwcError, RuntimeError):
    pass
