"""Exception hierarchy.

Everything raised on purpose by the package derives from :class:`AKError`.
The CLI maps :class:`InputError` to exit code 2 and :class:`NumericalError`
to exit code 3.
"""


class AKError(Exception):
    pass


class InputError(AKError, ValueError):
    """Malformed or inconsistent user input (expressions, manifests, ids)."""


class NumericalError(AKError, ArithmeticError):
    """Evaluation failed at a point (division, branch cut, singular matrix)."""


class ExprSyntaxError(InputError):
    def __init__(self, message, offset, text=None):
        self.message = message
        self.offset = offset
        self.text = text
        super().__init__(f"{message} at offset {offset}")


class UnknownIdentifier(ExprSyntaxError):
    pass


class SchemaError(InputError):
    pass


class HolomorphyViolation(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class NonAnalyticComponent(InputError):
    pass


class DimensionLimit(InputError):
    pass


class UnknownEntry(InputError):
    pass


class ParamOutOfRange(InputError):
    pass


class OddDimension(InputError):
    pass


class DivisionNearZero(NumericalError):
    pass


class BranchCutViolation(NumericalError):
    pass


class FieldViolation(NumericalError):
    """A real-field evaluation produced a value with a nonzero imaginary part."""


class SingularMetric(NumericalError):
    pass


class FrameSingular(NumericalError):
    pass


class NearNullEigenvalue(NumericalError):
    pass
