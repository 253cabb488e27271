"""Exception hierarchy.

Every error raised by the toolkit derives from :class:`NwcError`.  The two
intermediate classes map onto CLI exit codes: :class:`DataError` (bad file,
shape or channel mismatch, violated precondition) exits with 2 and
:class:`NumericError` (non-finite values) exits with 3.
"""


class NwcError(Exception):
    exit_code = 2


class DataError(NwcError, ValueError):
    exit_code = 2


class NumericError(NwcError, ArithmeticError):
    exit_code = 3


# grid / file format
class AlreadyNormalized(DataError):
    pass


class NotNormalized(DataError):
    pass


class OutOfRange(DataError):
    def __init__(self, channel, lo, hi):
        super().__init__(f"channel {channel} values span [{lo}, {hi}], outside its physical range")
        self.channel, self.lo, self.hi = channel, lo, hi


class ShapeMismatch(DataError):
    pass


class BadMagic(DataError):
    pass


class UnsupportedVersion(DataError):
    pass


class TruncatedPayload(DataError):
    pass


class CorruptFile(DataError):
    pass


class IoFailure(DataError):
    pass


class NonFiniteValue(NumericError):
    pass


# mixer
class PadRequired(DataError):
    pass


class WrongChannelCount(DataError):
    pass


# terrain
class GridTooSmall(DataError):
    pass


# impa
class NonPositiveVariance(DataError):
    pass


class IndivisibleDims(DataError):
    pass


class NoTrace(DataError):
    pass


class OutOfBounds(DataError):
    pass


# loss
class FrameTooSmall(DataError):
    pass


class TTooSmall(DataError):
    pass


class OddLength(DataError):
    pass


# advection
class TooFewFrames(DataError):
    pass


class BlockTooLarge(DataError):
    pass


# verification
class NormalizationMismatch(DataError):
    pass


class UndefinedBase(DataError):
    pass


class EmptyBand(DataError):
    pass


class AxisMismatch(DataError):
    pass
