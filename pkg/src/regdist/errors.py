"""Exception classes shared across the package."""


class RegdistError(Exception):
    """Base class for all package errors."""


class StencilOutsideDomain(RegdistError):
    """A finite-difference stencil point left the field's domain."""


class OnTargetSet(RegdistError):
    """Queried a relative neighborhood at a point on (or too close to) W."""


class OnW(OnTargetSet):
    """Tried to build a bump centered on W."""


class EmptySet(RegdistError):
    """An operation that needs a non-empty point set received an empty one."""


class NegativeLipschitz(RegdistError):
    """Lipschitz constants must be >= 0."""


class EmptyGrid(RegdistError):
    """A validator received an empty sample grid."""


class EmptyStratification(RegdistError):
    """A stratification with no strata cannot be validated."""


class MissingSupBound(RegdistError):
    """Certificate operation requires a sup bound that is absent."""


class MissingLowerBound(RegdistError):
    """Certificate operation requires a lower bound that is absent."""


class CertificateMismatch(RegdistError):
    """Certificates refer to different reference sets or orders."""


class ZeroDenominatorDetected(RegdistError):
    """A probe found |f| below its certified lower bound."""


class UnboundedInner(RegdistError):
    """Composition requires a bounded (k=0, sup-bounded) inner function."""


class EtaTooLarge(RegdistError):
    """Bump support scale must stay below the cell's slope constant L."""


class RecursionBase(RegdistError):
    """A bump recursion could not resolve the boundary into known strata."""


class MixedReference(RegdistError):
    """Bump union over bumps with different W or support scales."""


class CoverageGap(RegdistError):
    """A grid point off W is not covered by the partition plateaus."""


class InfeasibleSchedule(RegdistError):
    """The constant schedule produced a non-positive or non-finite value."""


class ContainmentViolation(RegdistError):
    """A sample of a carved neighborhood left its guaranteed slab/cell."""


class SupportLeak(RegdistError):
    """A partition weight is positive outside its local approximant's domain."""


class NonPositiveF(RegdistError):
    """Zero-set construction needs a positive distance-equivalent input."""


class EmptyLevelSet(RegdistError):
    """No level crossing found (level too large or box too small)."""


class EmptyContour(RegdistError):
    """The offset boundary contour could not be extracted."""


class LipschitzViolation(RegdistError):
    """Sampled increments exceeded the declared Lipschitz constant."""


class UnsupportedScene(RegdistError):
    """The scene lacks the structure a pipeline stage requires."""


class SceneSyntaxError(RegdistError):
    """Scene text could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SceneSemanticError(RegdistError):
    """Scene parsed but failed validation."""
