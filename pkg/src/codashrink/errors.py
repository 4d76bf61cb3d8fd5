"""Exception hierarchy shared by all modules."""


class CodaError(ValueError):
    """Base class for domain errors raised by codashrink."""


class DegenerateInput(CodaError):
    """Input carries no usable information (zero total, empty support, D < 2)."""


class BoundaryPoint(CodaError):
    """A composition with a zero part was passed where an interior point is required."""


class NotInTangentPlane(CodaError):
    """A clr-plane vector whose components do not sum to zero."""


class InvalidWeight(CodaError):
    pass


class InvalidParameter(CodaError):
    pass


class DimensionError(CodaError):
    pass


class InfiniteDivergence(CodaError):
    """KL(p || q) is infinite because q vanishes where p does not."""


class ImpossibleOutcome(CodaError):
    """Observed counts on a part with zero probability (log-probability is -inf)."""


class InsufficientData(CodaError):
    pass


class OracleStarved(CodaError):
    """Monte Carlo oracle rejected (almost) every draw."""
