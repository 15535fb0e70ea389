"""Exception hierarchy.

Every error raised by the library derives from :class:`QMError`, and most
also derive from the builtin they refine (``ValueError``) so callers can catch
either.
"""


class QMError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(QMError, ValueError):
    pass


class AxisError(QMError, IndexError):
    pass


class NonzeroRequired(QMError, ValueError):
    """The zero function was passed where a nonzero function is required."""


class PreconditionError(QMError, ValueError):
    pass


class GridTooSmall(QMError, ValueError):
    def __init__(self, half_width, required):
        self.half_width = half_width
        self.required = required
        super().__init__(
            f"grid half width {half_width:g} below required {required:g}"
        )


class TruncationError(QMError, ValueError):
    def __init__(self, message, defect):
        self.defect = defect
        super().__init__(f"{message} (defect {defect:.3e})")


class PlanRejected(QMError, ValueError):
    """No translation plan satisfies the degree cap and defect tolerance."""

    def __init__(self, message, defect=None, padded_degree=None):
        self.defect = defect
        self.padded_degree = padded_degree
        super().__init__(message)


class DirectionNotTangent(QMError, ValueError):
    def __init__(self, residual):
        self.residual = residual
        super().__init__(f"direction is not tangent to the fiber (|DQ| = {residual:.3e})")


class SampleOutsideChart(QMError, ValueError):
    pass


class OutOfOverlap(QMError, ValueError):
    pass


class NotHermitian(QMError, ValueError):
    pass
