"""Exception hierarchy shared by all spectra modules."""


class SpectraError(Exception):
    """Base class for all errors raised by this package."""


class ZeroAtPrecision(SpectraError):
    """An element indistinguishable from zero was used where a nonzero one is required."""


class DomainViolation(SpectraError):
    """An input lies outside the domain of the requested map (e.g. specialization at |w0| > 1)."""


class DegreeOverflow(SpectraError):
    """A ring operation produced a polynomial exceeding the chart degree bound."""


class SizeMismatch(SpectraError):
    """Matrix dimensions or coefficient rings are incompatible."""


class SizeLimit(SpectraError):
    """A combinatorial oracle was invoked beyond its intended size limits."""


class CompactnessUnverified(SpectraError):
    """An operation requiring a compactness certificate was given a violating matrix."""


class PrecisionExhausted(SpectraError):
    """The requested result cannot be certified at the working precision."""


class SeriesMismatch(SpectraError):
    """A Fredholm series does not originate from the operator it is used with."""


class TailUncertain(SpectraError):
    """The series tail bound cannot exclude lower Newton-polygon points in the requested range."""


class NoBreak(SpectraError):
    """The requested slope bound falls strictly inside a polygon segment (no vertex)."""


class NotCoprime(SpectraError):
    """Two factors share a certified common divisor."""


class NotDivisible(SpectraError):
    """A claimed polynomial divisibility fails at working precision."""


class Indeterminate(SpectraError):
    """The computation cannot decide between outcomes at the working precision."""


class OrderMismatch(SpectraError):
    """A supplied zero order disagrees with the certified one."""


class RouteDisagreement(SpectraError):
    """Two independent computation routes disagree beyond the logged precision slack."""


class RankMismatch(SpectraError):
    """A kernel rank differs from the one implied by the factorization."""


class RankUncertain(SpectraError):
    """Pivot valuations approach the precision limit; the rank cannot be certified."""


class NonStableKernel(SpectraError):
    """A commuting operator fails to preserve the computed kernel within precision slack."""


class SplitFailure(SpectraError):
    """The fiber algebra could not be split into local factors within the retry budget."""


class NonNilpotentKernel(SpectraError):
    """A base-change comparison kernel contains a non-nilpotent element (internal bug)."""


class UnsupportedFormat(SpectraError):
    """The requested report serialization does not apply to this payload."""
