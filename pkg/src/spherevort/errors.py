"""Exception hierarchy shared by all modules."""


class SphereVortError(Exception):
    """Base class for library errors."""


class InvalidArgumentError(SphereVortError, ValueError):
    """Bad scalar argument (counts, indices, parameter constraints)."""


class DomainError(SphereVortError, ValueError):
    """Evaluation outside the validity region of a function or solution."""


class ResolutionError(SphereVortError, ValueError):
    """Grid too coarse for the requested spectral truncation."""


class DegenerateCaseError(SphereVortError, ValueError):
    """Parameter combination excluded by the solution formula."""


class SingularTimeError(SphereVortError, ValueError):
    """Solution evaluated at a time where it is singular."""


class TopologyError(SphereVortError, ValueError):
    """Solution requested on the full sphere but multivalued there."""


class SingularRelationError(SphereVortError, ValueError):
    """Stream-function relation requested with nu = 0."""


class CapabilityError(SphereVortError, RuntimeError):
    """Requested mode needs oracles the object does not provide."""


class InvalidStateError(SphereVortError, ValueError):
    """Spectral state violates a structural invariant."""


class BlowUpError(SphereVortError, RuntimeError):
    """Time integration produced non-finite values."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class IllConditionedError(SphereVortError, RuntimeError):
    """Sample matrix of a least-squares decomposition is rank deficient."""


class InvalidParamsError(SphereVortError, ValueError):
    """Subalgebra class parameters violate a catalog constraint."""


class UndefinedPhaseError(SphereVortError, RuntimeError):
    """Phase measurement requested on a vanishing coefficient."""
