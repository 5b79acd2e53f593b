"""Exception types shared across the package."""


class DimensionMismatch(ValueError):
    """Operands have incompatible shapes."""


class NotHermitian(ValueError):
    pass


class NonAbelianError(ValueError):
    """A tuple that must commute does not."""


class SpectrumOutsideDomain(ValueError):
    """An eigenvalue lies outside the function's domain beyond the clip slack."""


class JointDiagonalizationError(RuntimeError):
    """Neither the generic path nor the Jacobi fallback reached the residual bound."""


class CentralizerViolation(ValueError):
    pass


class InfeasibleLP(RuntimeError):
    pass


class UnboundedLP(RuntimeError):
    pass
