"""Exception hierarchy shared by every laxforge module."""


class LaxforgeError(Exception):
    """Base class for engine errors."""


class RingMismatchError(LaxforgeError):
    """Operands live in different ring contexts."""


class InvertibilityError(LaxforgeError):
    """A negative power was requested of something that is not invertible."""


class DepthUnreachableError(LaxforgeError):
    """A truncated operand cannot be regenerated to the depth a result needs."""


class TruncationError(LaxforgeError):
    """A coefficient below the known floor of a truncated series was requested."""


class TailInconsistentError(LaxforgeError):
    """The negative part of an operator is not of the form D^-1 o w."""


class StructureViolationError(LaxforgeError):
    """A flow produced nonzero coefficients above the top order of L."""


class NormalizationError(LaxforgeError):
    """A transformed operator failed to come out monic."""


class ClosednessViolationError(LaxforgeError):
    """The reciprocal 1-form dz is not closed along the flows."""


class SpecError(LaxforgeError):
    """Invalid spec-file input."""


class SpecSyntaxError(SpecError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


class SpecSemanticError(SpecError):
    pass
