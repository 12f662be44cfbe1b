"""Exception types shared across the package."""


class PhicalError(Exception):
    pass


class DivisionByZero(PhicalError, ZeroDivisionError):
    pass


class PoleAtSpecialization(PhicalError, ArithmeticError):
    pass


class VariableMismatch(PhicalError, ValueError):
    pass


class ExpansionDirectionError(PhicalError, ValueError):
    pass


class CompositionError(PhicalError, ValueError):
    pass


class NotAnAssociateBase(PhicalError, ValueError):
    pass


class ShapeError(PhicalError, TypeError):
    """Product of two tables whose supports make the sum infinite."""


class PrecisionExhausted(PhicalError):
    pass


class Inconclusive(PhicalError):
    pass


class PolicyError(PhicalError, ValueError):
    pass


class WindowEscape(PhicalError):
    pass


class NoMultiplierFound(PhicalError):
    pass


class UncertifiedMultiplier(PhicalError):
    pass


class ParseError(PhicalError, ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.message = message
        self.offset = offset


class CacheFormatError(PhicalError, ValueError):
    pass
