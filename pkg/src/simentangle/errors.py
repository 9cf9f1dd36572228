"""Exception types shared across the package."""


class SEPError(ValueError):
    """Base class for every protocol or arithmetic failure raised here."""


class InvalidModulus(SEPError):
    pass


class NotInvertible(SEPError):
    pass


class InvalidInput(SEPError):
    pass


class NotSemiprime(SEPError):
    pass


class NotCoprime(SEPError):
    pass


class UnsupportedPrime(SEPError):
    pass


class UnsupportedVariant(SEPError):
    pass


class InvalidSetup(SEPError):
    pass


class BadExponent(SEPError):
    pass


class BadMessage(SEPError):
    pass


class NotAResidue(SEPError):
    pass


class NotAFactor(SEPError):
    pass


class ProtocolViolation(SEPError):
    pass


class InvalidDegree(SEPError):
    pass


class ImpossibleOutcome(SEPError):
    pass


class WireError(SEPError):
    """Malformed or unacceptable frame."""


class OversizeFrame(WireError):
    pass


class TruncatedFrame(WireError):
    pass


class UnknownTag(WireError):
    pass


class WrongFieldCount(WireError):
    pass


class TransportFailure(SEPError):
    """Network error, timeout, or an ERROR message received from a peer."""

    def __init__(self, message, code=None):
        super().__init__(message)
        self.code = code
