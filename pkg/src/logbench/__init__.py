"""logbench: log-parsing benchmark, metrics, and annotation toolkit."""

from .errors import (
    ConfigurationError,
    EvaluationError,
    FormatError,
    IngestionError,
    IntegrityError,
    LogbenchError,
    StateError,
    ValidationError,
)
from .model import (
    DEFAULT_DELIMITERS,
    PLACEHOLDER,
    GroundTruth,
    LogRecord,
    ParseResult,
    Template,
    make_template,
    normalize_template,
    param_count,
    tokenize,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "DEFAULT_DELIMITERS",
    "EvaluationError",
    "FormatError",
    "GroundTruth",
    "IngestionError",
    "IntegrityError",
    "LogRecord",
    "LogbenchError",
    "PLACEHOLDER",
    "ParseResult",
    "StateError",
    "Template",
    "ValidationError",
    "make_template",
    "normalize_template",
    "param_count",
    "tokenize",
    "__version__",
]
