"""Exception types shared across the embedding pipeline."""


class ExprError(ValueError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message, offset):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownIdentifierError(ExprError):
    def __init__(self, name, offset):
        super().__init__(f"unknown identifier {name!r} at offset {offset}")
        self.name = name
        self.offset = offset


class ExprDomainError(ArithmeticError):
    def __init__(self, message, subexpr):
        super().__init__(f"{message} in {subexpr}")
        self.subexpr = subexpr


class PositivityError(ValueError):
    """A metric component is non-positive somewhere on its sampling grid."""

    def __init__(self, message, point=None, value=None):
        super().__init__(message)
        self.point = point
        self.value = value


class SingularJacobianError(ArithmeticError):
    def __init__(self, message, point=None, residual=None):
        super().__init__(message)
        self.point = point
        self.residual = residual


class InversionError(ArithmeticError):
    def __init__(self, message, point=None, residual=None):
        super().__init__(message)
        self.point = point
        self.residual = residual


class DomainExitError(ValueError):
    """A characteristic left the coefficient domain before reaching the initial line."""

    def __init__(self, message, exit_point=None):
        super().__init__(message)
        self.exit_point = exit_point


class RangeError(ValueError):
    pass


class InconsistencyError(ArithmeticError):
    pass


class RealityViolation(ArithmeticError):
    """The radicand of the b' standard form is not positive."""

    def __init__(self, s, margin):
        super().__init__(f"reality violation at s={s!r}: margin S-1={margin!r}")
        self.s = s
        self.margin = margin


class PipelineError(RuntimeError):
    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
