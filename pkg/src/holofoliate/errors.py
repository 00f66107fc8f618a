"""Exception hierarchy.

Every class carries the name of the hypothesis it guards so that the CLI can
report which condition failed.
"""


class HolofoliateError(Exception):
    """Base class for all package errors."""

    hypothesis = "unspecified"


class InputError(HolofoliateError, ValueError):
    """Malformed or out-of-range input (maps to CLI exit code 1)."""

    hypothesis = "well-formed input"


class CertificateError(HolofoliateError):
    """A mathematical certificate failed (maps to CLI exit code 2)."""


class NotHolomorphic(CertificateError):
    hypothesis = "holomorphy (no negative Fourier modes)"


class CurveThroughZero(CertificateError):
    hypothesis = "winding: curve must avoid 0"


class Undersampled(CertificateError):
    hypothesis = "winding: phase increments below the sampling threshold"


class NonzeroWinding(CertificateError):
    hypothesis = "winding: zero winding of F_w along the leaf"


class OutOfRange(InputError):
    hypothesis = "torus level t > 0"


class ZeroSection(InputError):
    hypothesis = "nonvanishing: w != 0"


class DegenerateGradient(CertificateError):
    hypothesis = "monotonicity: F_w != 0 away from w = 0"


class InvalidFamily(InputError):
    hypothesis = "monotonicity and positivity of the torus family"


class NoConvergence(CertificateError):
    hypothesis = "Newton convergence near a good seed"


class LeafHitZero(CertificateError):
    hypothesis = "nonvanishing: g(lambda) != 0 inside the disk"


class ContinuationStuck(CertificateError):
    hypothesis = "closedness: continuation step above min_step"

    def __init__(self, message, last_t=None, leaf_index=None):
        super().__init__(message)
        self.last_t = last_t
        self.leaf_index = leaf_index


class FoliationDegenerate(CertificateError):
    hypothesis = "disjointness and transversality of leaves"


class PointNotEnclosed(CertificateError):
    hypothesis = "winding: probe point swept by the leaf centres"


class TargetToleranceMissed(CertificateError):
    hypothesis = "leaf passes through the probe point"


class PointsCollide(InputError):
    hypothesis = "injectivity of the motion"


class IntegrationFailure(CertificateError):
    hypothesis = "Lipschitz flow of the velocity field"


class ModuliCollision(InputError):
    hypothesis = "injectivity: distinct initial leaves for distinct points"


class StarShapeViolation(CertificateError):
    hypothesis = "star-shaped fibres of the pushed tori"


class CoincidenceCheckFailed(CertificateError):
    hypothesis = "uniqueness: extension coincides with the given motion"

    def __init__(self, message, errors=None):
        super().__init__(message)
        self.errors = errors or {}
