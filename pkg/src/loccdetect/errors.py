"""Exception types shared across the package."""


class LoccDetectError(Exception):
    """Base class for every error raised by this package."""


class DuplicateFactor(LoccDetectError, ValueError):
    pass


class UnknownFactor(LoccDetectError, KeyError):
    pass


class DimensionCap(LoccDetectError, ValueError):
    pass


class ShapeMismatch(LoccDetectError, ValueError):
    pass


class InvalidState(LoccDetectError, ValueError):
    pass


class ImaginaryResidue(LoccDetectError, ArithmeticError):
    pass


class UnknownLabel(LoccDetectError, KeyError):
    pass


class FormulaMismatch(LoccDetectError, AssertionError):
    """A closed-form value disagrees with the direct matrix computation."""


class SymbolicMismatch(LoccDetectError, AssertionError):
    pass


class NoFormula(LoccDetectError, KeyError):
    pass


class ClosureOverflow(LoccDetectError, RuntimeError):
    pass


class LpMismatch(LoccDetectError, AssertionError):
    pass


class EquivalenceMismatch(LoccDetectError, AssertionError):
    pass


class PremiseViolated(LoccDetectError, ValueError):
    pass


class ReconstructionMismatch(LoccDetectError, AssertionError):
    pass
