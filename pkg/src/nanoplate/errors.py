"""Exception hierarchy.

Validation failures (bad input, inadmissible data) derive from
:class:`ValidationError`; failures of the numerics themselves derive from
:class:`NumericError`.  The CLI maps them to exit codes 2 and 3.
"""


class NanoplateError(Exception):
    pass


class ValidationError(NanoplateError, ValueError):
    pass


class NumericError(NanoplateError, ArithmeticError):
    pass


class ConfigError(ValidationError):
    pass


class InvalidMaterialError(ValidationError):
    pass


class SingularMaterialError(InvalidMaterialError):
    pass


class InvalidTensorSplitError(ValidationError):
    pass


class MaterialNotConvexError(ValidationError):
    pass


class InsufficientDofsError(ValidationError):
    pass


class LoadPlacementError(ValidationError):
    pass


class InvalidCoefficientError(ValidationError):
    pass


class DomainError(ValidationError):
    """Point outside the closed plate domain."""


class InsufficientSamplesError(ValidationError):
    pass


class IndefiniteSystemError(NumericError):
    """The system matrix is not positive definite (assembly bug)."""


class SolverDivergenceError(NumericError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DegenerateDataError(NumericError):
    pass
