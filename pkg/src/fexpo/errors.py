"""Exception types raised across the package."""


class FexpoError(Exception):
    """Base class for all package errors."""


class ValidationError(FexpoError, ValueError):
    """Input failed a precondition."""


class ComponentRequired(ValidationError):
    pass


class DisjointnessViolated(ValidationError):
    pass


class WeightUnderflow(ValidationError):
    pass


class DomainError(ValidationError):
    pass


class AssumptionViolated(ValidationError):
    pass


class TSetInvalid(ValidationError):
    pass


class TaxonomyMismatch(ValidationError):
    pass


class ComponentHasNoWeight(ValidationError):
    pass


class IndexOutOfRange(ValidationError):
    pass


class NonPositiveValue(ValidationError):
    pass


class DegreeTooLarge(ValidationError):
    pass


class ResolutionMismatch(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass


class KernelMissing(ValidationError):
    pass


class GraphSyntaxError(ValidationError):
    pass


class TooLarge(FexpoError):
    pass


class TolUnachievable(FexpoError):
    pass


class CirculantEmbeddingFailure(FexpoError):
    pass


class QuadratureFailure(FexpoError):
    pass
