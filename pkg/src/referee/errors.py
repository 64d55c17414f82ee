class RefereeError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(RefereeError, ValueError):
    """Invalid configuration values (bad ranges, divisibility, non-SPD information)."""


class SessionError(RefereeError, ValueError):
    """A session directory is inconsistent: missing poses, mixed shapes, bad images."""


class DescriptorFileError(RefereeError, OSError):
    """A descriptor file is corrupt, truncated, or not a descriptor file at all."""


class DescriptorMismatchError(RefereeError, ValueError):
    """Descriptors built with different parameters were mixed together."""
