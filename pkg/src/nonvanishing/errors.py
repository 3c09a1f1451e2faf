"""Exception types raised across the package."""


class NonvanishingError(ValueError):
    """Base class for all domain errors."""


class NotPrime(NonvanishingError):
    pass


class TooSmall(NonvanishingError):
    pass


class ZeroResidue(NonvanishingError):
    pass


class NotCoprime(NonvanishingError):
    pass


class NonInvertible(NonvanishingError):
    pass


class NonPositiveArgument(NonvanishingError):
    pass


class OddCharacter(NonvanishingError):
    pass


class LengthTooSmall(NonvanishingError):
    pass


class RangeViolation(NonvanishingError):
    """Raised when a dyadic block breaks one of the admissible-range conditions.

    ``condition`` names the violated inequality.
    """

    def __init__(self, condition: str, detail: str = ""):
        self.condition = condition
        msg = f"range condition violated: {condition}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class WindowEmpty(NonvanishingError):
    pass


class ScaleExceeded(NonvanishingError):
    pass


class DegenerateWeights(NonvanishingError):
    pass


class NonpositiveTheta(NonvanishingError):
    pass


class EmptyRegion(NonvanishingError):
    pass


class ConfigError(NonvanishingError):
    """Bad experiment configuration; ``key`` names the offending field."""

    def __init__(self, key: str, detail: str):
        self.key = key
        super().__init__(f"{key}: {detail}")
