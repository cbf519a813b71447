class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class PreconditionError(ValueError):
    """A documented precondition of an operation does not hold."""


class ScaleError(ValueError):
    """The request exceeds an exhaustive-computation cap."""


class MatroidAxiomError(ValueError):
    """An explicit set family is not a matroid.

    ``witness`` is the violating pair of masks.
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class InstanceError(ValueError):
    """An instance file failed schema or semantic validation."""
