"""Exception types shared across the package."""


class WavebellError(Exception):
    """Base class for all package-specific errors."""


class DomainError(WavebellError, ValueError):
    """An argument violates a documented precondition."""


class DegenerateFieldError(WavebellError, ValueError):
    """The field has no usable second Schmidt component (zero intensity or
    fully polarized), so the requested decomposition or stripping step is
    undefined."""


class StrippedBeamError(WavebellError, ArithmeticError):
    """The stripped auxiliary beam carries no light, so the intensity-based
    probability extraction is undefined."""


class ExtractionError(WavebellError, ArithmeticError):
    """An extracted probability exceeds 1 by more than numerical tolerance,
    signalling a phase or sign-convention bug rather than float noise."""


class ModelContractError(WavebellError, ValueError):
    """A hidden-variable response function returned values outside [-1, 1]."""
