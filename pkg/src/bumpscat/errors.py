"""Exception types raised across the package."""


class BumpscatError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(BumpscatError):
    """Invalid or inconsistent experiment configuration."""


class InadmissibleSectionPoint(BumpscatError):
    """Section point not on the energy surface (radicand of p_r is <= 0)."""


class IntegrationFailure(BumpscatError):
    """Trajectory integration failed (step-size underflow or energy drift)."""


class UndecidedTrajectory(BumpscatError):
    """Trajectory exceeded its time budget without crossing or escaping."""


class EmptyIslandSet(BumpscatError):
    """No surviving islands were supplied to a dimension estimator."""


class StoppingRuleViolation(BumpscatError):
    """Finest islands are larger than the coarse-mesh cell size."""


class BoxCountError(BumpscatError):
    """Too few occupied cells for a box-count slope."""


class QuadratureBoundExceeded(BumpscatError):
    """Potential-matrix quadrature error bound exceeds the assembly gate."""


class OperatorShapeError(BumpscatError):
    """Vector length does not match the operator dimension."""


class DenseGuardError(BumpscatError):
    """Refused to densify an operator above the size guard."""


class CgnrError(BumpscatError):
    """Inner linear solver did not reach its tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class EmptyResonanceSet(BumpscatError):
    """No resonances available for residual statistics."""


class TurningPointError(BumpscatError):
    """Energy outside (0, 1) or turning points out of order."""


class BranchTrackingError(BumpscatError):
    """Action integrand passed too close to zero mid-contour."""


class FixedPointError(BumpscatError):
    """Symmetric bounce fixed point could not be located to tolerance."""
