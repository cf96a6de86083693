"""Exception hierarchy shared by all modules."""


class StarkError(Exception):
    """Base class for every error raised by this package."""


class DiscriminantNegative(StarkError):
    pass


class NotSkewHermitian(StarkError):
    pass


class NotStark(StarkError):
    pass


class ToleranceBreach(StarkError):
    """A reduction stage produced a residual above tolerance."""

    def __init__(self, message, stage=None, residual=None):
        super().__init__(message)
        self.stage = stage
        self.residual = residual


class OutsideCanonicalPatch(StarkError):
    pass


class OutsideValidRegion(StarkError):
    """Integration left the region where (t, u, v) are real and finite."""

    def __init__(self, message, coordinate=None):
        super().__init__(message)
        if isinstance(coordinate, (tuple, list)):
            coordinate = tuple(float(c) for c in coordinate)
        elif coordinate is not None:
            coordinate = float(coordinate)
        self.coordinate = coordinate


class UDegenerate(StarkError):
    pass


class BZero(StarkError):
    def __init__(self, message, a_cubed=None, b=None):
        super().__init__(message)
        self.a_cubed = a_cubed
        self.b = b


class StepUnderflow(StarkError):
    pass


class MuZero(StarkError):
    pass


class NonUnitaryDrift(StarkError):
    pass


class ParseError(StarkError):
    pass


class DimensionMismatch(StarkError):
    pass
