"""Exception hierarchy.

Every error raised by the package derives from :class:`DsMetricError`.
Validation problems (bad input data) derive from :class:`ValidationError`
and map to CLI exit code 2; budget exhaustion maps to exit code 3.
"""


class DsMetricError(Exception):
    exit_code = 1


class ValidationError(DsMetricError):
    """Input data does not describe a valid object."""

    exit_code = 2

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = list(violations or [])


class BudgetExceeded(DsMetricError):
    exit_code = 3


# metric_core
class MetricAxiomError(ValidationError):
    pass


class NonSquareMatrix(MetricAxiomError):
    pass


class NonFiniteEntry(MetricAxiomError):
    pass


class NegativeDistance(MetricAxiomError):
    pass


class NonzeroDiagonal(MetricAxiomError):
    pass


class AsymmetricMatrix(MetricAxiomError):
    pass


class DuplicatePoint(MetricAxiomError):
    pass


class TriangleViolation(MetricAxiomError):
    pass


class CoordMismatch(MetricAxiomError):
    pass


class EmptySubset(ValidationError):
    pass


class SpaceMismatch(ValidationError):
    pass


class NonpositiveEpsilon(ValidationError):
    pass


class IndexOutOfRange(ValidationError):
    pass


# relation_core
class NotSurjectiveForward(ValidationError):
    pass


class NotSurjectiveBackward(ValidationError):
    pass


class PointNotInCarrier(ValidationError):
    pass


class NotAFunction(ValidationError):
    pass


class CarrierMismatch(ValidationError):
    pass


class CompositionNotSurjective(ValidationError):
    pass


# discretizer
class SurjectivityFailure(DsMetricError):
    pass


# symbolic_sft
class DepthOverflow(BudgetExceeded):
    pass


class NotEuclideanAmbient(ValidationError):
    pass


# cantor_match
class BadGeometry(ValidationError):
    pass


class MeshTooCoarse(ValidationError):
    def __init__(self, message, required_delta=None):
        super().__init__(message)
        self.required_delta = required_delta


class RefinementImpossible(DsMetricError):
    pass


class LeafCountMismatch(ValidationError):
    pass


class DistanceNotBelowDelta(ValidationError):
    pass


class NotBijection(ValidationError):
    pass


class NoConjugatingBijection(DsMetricError):
    pass


# iso_quotient
class EpsilonBelowHalfDistortion(ValidationError):
    pass


class DegenerateIdentification(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class NotACorrespondence(ValidationError):
    pass


# am_metric
class PartialMap(ValidationError):
    pass


class PlacementMissing(ValidationError):
    pass


# pipelines / cli
class GridTooCoarse(ValidationError):
    pass


class ModulusInconsistent(ValidationError):
    pass


class CertificateFailure(DsMetricError):
    pass


class SchemaError(ValidationError):
    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class UnknownCommand(ValidationError):
    pass
