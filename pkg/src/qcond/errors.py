"""Exception hierarchy shared by every qcond module."""


class QcondError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(QcondError, ValueError):
    pass


class ShapeMismatch(QcondError, ValueError):
    pass


class NotHermitian(QcondError, ValueError):
    pass


class NoConvergence(QcondError, RuntimeError):
    pass


class RankDeficient(QcondError, ValueError):
    pass


class NotPositive(QcondError, ValueError):
    pass


class ZeroTrace(QcondError, ValueError):
    pass


class NotTracePreserving(QcondError, ValueError):
    def __init__(self, message, deviation=None):
        super().__init__(message)
        self.deviation = deviation


class NotUnitary(QcondError, ValueError):
    pass


class NotAResolutionOfIdentity(QcondError, ValueError):
    pass


class OutputNotResolutionOfIdentity(NotAResolutionOfIdentity):
    pass


class ParameterOutOfRange(QcondError, ValueError):
    pass


class IndexOutOfRange(QcondError, IndexError):
    pass


class InconsistentTable(QcondError, ValueError):
    pass


class ConsistencyResidual(QcondError, ValueError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class EmptyBatch(QcondError, ValueError):
    pass


class RankTooSmall(QcondError, ValueError):
    pass


class NotPSD(QcondError, ValueError):
    pass


class PowerOutOfRange(QcondError, ValueError):
    pass


class NotDoublyStochastic(QcondError, ValueError):
    pass


class UnknownCheck(QcondError, KeyError):
    pass


class UnknownDemo(QcondError, KeyError):
    pass


class ParseError(QcondError, ValueError):
    def __init__(self, message, position=None):
        super().__init__(message)
        self.position = position


class SchemaMismatch(QcondError, ValueError):
    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class ValidationError(QcondError, ValueError):
    """A decoded document failed the owning module's validation."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
