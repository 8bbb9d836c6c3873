"""Exception hierarchy shared by every stage of the pipeline."""


class MsVoiceError(Exception):
    """Base class for all errors raised by this package."""


class ContractError(MsVoiceError, ValueError):
    """An argument violates an operation's precondition."""


class FormatError(MsVoiceError, ValueError):
    """Input file uses an encoding this package does not accept."""


class CorruptFileError(MsVoiceError, ValueError):
    """Input file is truncated or structurally broken."""


class ParseError(MsVoiceError, ValueError):
    """Malformed annotation text. ``line`` is 1-based, or None if unknown."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(MsVoiceError, ValueError):
    """Well-formed input whose content breaks a domain invariant."""


class InsufficientDataError(MsVoiceError, ValueError):
    """Too little data to compute a quantity. ``feature`` names the quantity."""

    def __init__(self, message, feature=None):
        self.feature = feature
        if feature is not None:
            message = f"{feature}: {message}"
        super().__init__(message)


class SchemaError(MsVoiceError, ValueError):
    """Tables or files do not share the expected columns."""


class ConfigError(MsVoiceError, ValueError):
    """Unknown or malformed configuration entry."""
