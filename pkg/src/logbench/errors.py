"""Exception types shared across the toolkit."""


class LogbenchError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(LogbenchError):
    """A manifest, parser config, or run spec is malformed."""


class IngestionError(LogbenchError):
    """A raw log or annotation file could not be read."""


class FormatError(LogbenchError):
    """A structured file is missing required columns or fields."""


class IntegrityError(LogbenchError):
    """Data violates an internal invariant (dangling ids, failed splice)."""


class EvaluationError(LogbenchError):
    """Parse result and ground truth do not cover the same messages."""


class ValidationError(LogbenchError):
    """A submitted template is rejected (names the offending template)."""


class StateError(LogbenchError):
    """An operation was invoked in the wrong session state."""
