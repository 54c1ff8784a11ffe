"""Exception types shared across the engine."""


class ShapeGateError(Exception):
    """Base class for engine errors."""


class ConfigError(ShapeGateError):
    """Bad or unreadable configuration file."""


class ImageFormatError(ShapeGateError):
    """Unreadable or unsupported image file."""


class ManifestError(ShapeGateError):
    """Manifest missing, malformed, or label count does not match blobs."""


class DbVersionError(ShapeGateError):
    """Database file carries an unknown schema version."""


class DbCorruptionError(ShapeGateError):
    """Database file truncated, unparseable, or checksum mismatch."""


class FingerprintMismatchError(ShapeGateError):
    """Database was built under a different shape/scale configuration."""
