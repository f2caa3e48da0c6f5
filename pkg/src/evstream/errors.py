"""Exception types shared across the toolkit."""


class EvstreamError(Exception):
    """Base class for all toolkit errors."""


class GeometryError(EvstreamError):
    """Event coordinates outside the declared sensor geometry."""


class StreamOrderError(EvstreamError):
    """Timestamps go backwards beyond the jitter tolerance."""

    def __init__(self, index, message=None):
        self.index = index
        super().__init__(message or f"non-monotonic timestamp at event index {index}")


class ConfigError(EvstreamError):
    """Invalid filter / encoder configuration."""


class ScriptError(EvstreamError):
    """Invalid synthetic scene script."""


class FormatError(EvstreamError):
    """Malformed event file (bad magic, truncated record, bad field)."""

    def __init__(self, message, offset=None, line=None):
        self.offset = offset
        self.line = line
        super().__init__(message)


class TimestampRangeError(EvstreamError):
    """Timestamp does not fit the on-disk representation."""


class AlignmentError(EvstreamError):
    """Two per-event sequences that must be aligned have different lengths."""


class NormalizationError(EvstreamError):
    """Normalization requested on a sequence with no valid entries."""
