"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid model, source, or protocol configuration."""


class ProtocolError(RuntimeError):
    """A measurement procedure hit a state it cannot recover from."""


class SamplingTimeError(RuntimeError):
    """No sampling period on the allowed grid satisfies the error budget."""


class DegenerateFitError(ValueError):
    """Regression input cannot determine a line (fewer than two distinct x)."""


class IngestError(ValueError):
    """Malformed measurement file; message carries the offending line."""
