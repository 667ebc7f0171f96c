"""Exception types shared across the package."""


class CalibrationError(Exception):
    """Base class for all errors raised by this package."""


class NotARotationError(CalibrationError):
    """A matrix failed the orthonormality / determinant check for SO(3)."""


class TrajectoryParseError(CalibrationError):
    """A trajectory file could not be parsed.

    Carries the 1-based line number of the offending row when known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NonMonotonicTimestampsError(CalibrationError):
    """Trajectory timestamps are not strictly increasing."""


class TooFewPosesError(CalibrationError):
    """Not enough poses to form any motion pair under the given strategy."""


class LengthMismatchError(CalibrationError):
    """Two trajectories that must be index-corresponded differ in length."""


class DegenerateMotionError(CalibrationError):
    """Motion pairs whose rotation axes span fewer than two directions;
    the extrinsic is unobservable from such data."""


class InfeasibleWeightSumError(CalibrationError):
    """Requested minimum inlier weight sum exceeds the number of pairs."""
