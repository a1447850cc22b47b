"""Exception types shared across the package."""


class CncrlError(Exception):
    """Base class for all package errors."""


class InputError(CncrlError):
    """Bad caller input: out-of-alphabet symbols, malformed files, bad config."""


class ConfigError(InputError):
    """Invalid or inconsistent experiment configuration."""


class MdpParseError(InputError):
    """Malformed explicit-MDP file. Carries a 1-based line number."""

    def __init__(self, message, line_no=None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class ResourceLimitError(CncrlError):
    """A construction would exceed a configured size cap."""


class NumericError(CncrlError):
    """A numeric routine failed to reach its required accuracy."""

    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)
