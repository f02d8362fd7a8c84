"""Error types shared across the package.

The CLI maps these onto distinct exit codes, so keep the split meaningful:
ConfigError for bad user input, FormatError for broken files on disk,
NumericsError for non-finite values showing up in computation.
"""


class ConfigError(ValueError):
    """Invalid configuration: unknown keys, out-of-range values, bad flags."""


class FormatError(ValueError):
    """A file on disk does not conform to its declared binary/text format."""


class NumericsError(FloatingPointError):
    """A NaN or Inf appeared where only finite values are allowed."""
