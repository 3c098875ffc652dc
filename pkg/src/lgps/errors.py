"""Exception hierarchy. Every error raised by the package derives from LgpsError."""


class LgpsError(Exception):
    pass


class ShapeError(LgpsError, ValueError):
    """Array dimensions are inconsistent."""


class DomainError(LgpsError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class LabelError(LgpsError, KeyError):
    """Slot label unknown or duplicated."""

    def __str__(self) -> str:  # KeyError repr-quotes its message otherwise
        return str(self.args[0]) if self.args else ""


class UsageError(LgpsError, ValueError):
    """Operation called with a combination of arguments it does not support."""


class ConventionError(LgpsError, ArithmeticError):
    """A quantity that must be real came out complex; signals a conjugation mistake."""


class InvalidInstrumentError(LgpsError, ValueError):
    pass


class InapplicableError(LgpsError, ValueError):
    """A structural test was requested for a state outside its domain of validity."""


class DegenerateConditioningError(LgpsError, ZeroDivisionError):
    pass


class SchemaError(LgpsError, ValueError):
    """Input document does not follow the expected layout.

    ``path`` names the offending field, e.g. ``plan[1].basis[0]``.
    """

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
