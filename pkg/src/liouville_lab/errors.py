"""Exception hierarchy shared by all modules."""


class LiouvilleLabError(Exception):
    """Base class for every error raised by the package."""


class CertificateError(LiouvilleLabError):
    """A family constructor failed one of its validity certificates.

    ``certificates`` holds every certificate computed before the failure
    so callers can report which one broke.
    """

    def __init__(self, message, certificates=()):
        super().__init__(message)
        self.certificates = list(certificates)

    @property
    def failed(self):
        return [c.name for c in self.certificates if not c.passed]


class DegenerateMetricError(LiouvilleLabError):
    """The metric determinant is (numerically) zero at some evaluation point."""


class SignatureError(LiouvilleLabError):
    """An operation requires a different metric signature."""


class CollisionError(CertificateError):
    """X(x) and Y(y) come closer than the separation tolerance."""


class PeriodicityError(CertificateError):
    """A function is not periodic with respect to the declared lattice."""


class SymmetryError(CertificateError):
    """A required reflection symmetry fails."""


class ConformalFactorError(CertificateError):
    """A conformal factor is nonpositive or vanishes on the domain."""


class CauchyRiemannError(CertificateError):
    """Real and imaginary parts do not form a holomorphic pair."""


class ZeroCrossingError(LiouvilleLabError):
    """An integrand coefficient vanishes inside the quadrature interval."""


class SingularIntegralError(LiouvilleLabError):
    """The mixed tensor of an integral is not invertible."""


class OrderingError(CertificateError):
    """min X must exceed max Y for the Riemannian partner construction."""


class NonIntegralError(LiouvilleLabError):
    """One or more candidate functions fail the Poisson bracket check."""

    def __init__(self, message, names=()):
        super().__init__(message)
        self.names = list(names)


class IntegrationError(LiouvilleLabError):
    """Base class for geodesic integration failures."""


class StepUnderflowError(IntegrationError):
    """Step refinement reached the minimum step without meeting tolerance."""

    def __init__(self, message, t_reached=None, h=None):
        super().__init__(message)
        self.t_reached = t_reached
        self.h = h


class StationaryPointError(LiouvilleLabError):
    """A sampled curve has (numerically) zero velocity."""
