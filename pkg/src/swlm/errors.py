"""Exception hierarchy shared across the package."""


class SwlmError(Exception):
    """Base class for all package errors."""


class EmptyCorpus(SwlmError):
    pass


class InvalidEncoding(SwlmError):
    pass


class EmptyWord(SwlmError, ValueError):
    pass


class MalformedLine(SwlmError):
    pass


class CharAdditionForbidden(SwlmError):
    pass


class NonFiniteError(SwlmError, FloatingPointError):
    pass


class ShapeError(SwlmError, ValueError):
    pass


class VersionError(SwlmError):
    pass


class ChecksumError(SwlmError):
    pass


class Unrepresentable(SwlmError):
    pass


class InventoryTooSmall(SwlmError):
    pass


class ConfigError(SwlmError):
    pass
