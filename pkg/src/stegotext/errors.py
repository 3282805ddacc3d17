"""Exception taxonomy shared across the toolkit."""


class StegotextError(Exception):
    """Base class for all library errors."""


class ConfigError(StegotextError):
    """Bad configuration value (unsupported key size, epsilon out of range, ...)."""


class EncodingError(StegotextError):
    """Token id or bit sequence that cannot be encoded at the declared width."""


class InvalidPrefixError(StegotextError):
    """Bit prefix with zero probability mass; indicates a caller bug."""


class ImpossibleSampleError(StegotextError):
    """A zero-probability branch was selected by the supplied randomness."""


class ModelUnavailableError(StegotextError):
    """Remote model transport failure (connection, timeout, process death)."""


class ProtocolError(StegotextError):
    """Remote model answered with a malformed or inconsistent frame."""


class TransmissionComplete(StegotextError):
    """The feedback code has already delivered the whole message."""
