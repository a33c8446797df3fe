"""Exception hierarchy.

Everything raised on purpose by the package derives from :class:`TrhomError`.
The CLI maps :class:`ConfigError` to exit code 2, :class:`DomainError` to 3 and
:class:`IoFailure` to 4.
"""


class TrhomError(Exception):
    """Base class for all package errors."""


class ConfigError(TrhomError, ValueError):
    """A configuration file or value is malformed."""


class IoFailure(TrhomError, OSError):
    """Reading or writing an artifact failed."""


class DomainError(TrhomError, ValueError):
    """An operation was called outside its mathematical domain."""


# fock algebra
class UnmappedMode(DomainError, KeyError):
    pass


class ZeroOperator(DomainError):
    pass


class ZeroState(DomainError):
    pass


class NotNormalized(DomainError):
    pass


class PhotonCapExceeded(DomainError):
    pass


# optics
class UnknownPort(DomainError):
    pass


class DuplicatePorts(DomainError):
    pass


class OutOfRange(DomainError):
    pass


class UniverseMismatch(DomainError):
    pass


class NonUnitaryMap(DomainError):
    pass


# source
class EmptyEnvelope(DomainError):
    pass


class GridMismatch(DomainError):
    pass


class NonpositiveCoherence(DomainError):
    pass


# detection
class NotTwoPhoton(DomainError):
    pass


class DegenerateCurve(DomainError):
    pass


class RateInconsistent(DomainError):
    pass


class UnsortedStream(DomainError):
    pass


class TagFormatError(IoFailure):
    pass


# metrics / calibration
class NonpositivePower(DomainError):
    pass


class TooFewSamples(DomainError):
    pass


class Unreachable(DomainError):
    pass
