"""Exception hierarchy shared by every pipeline stage."""


class ApexError(Exception):
    """Base class; the CLI maps these to machine-readable error payloads."""

    code = "apex_error"


class ConfigurationError(ApexError, ValueError):
    code = "configuration_error"


class InputError(ApexError, ValueError):
    code = "input_error"


class InsufficientSignalError(ApexError):
    """A window or trial does not contain enough beats to derive HRV features."""

    code = "insufficient_signal"


class SelectionError(ApexError):
    code = "selection_error"

    def __init__(self, message, table=None):
        super().__init__(message)
        self.table = table


class FitError(ApexError):
    code = "fit_error"


class ProtocolError(ApexError):
    """Evaluation protocol violation, e.g. a test subject inside the ensemble."""

    code = "protocol_error"


class IngestionError(ApexError):
    code = "ingestion_error"
