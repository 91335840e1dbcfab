"""
Utility modules for gloran.
"""

from gloran.utils.error_handling import (
    GloranError,
    ConfigError,
    InvalidRangeError,
    ValueTooLargeError,
    TraceParseError,
    StorageError,
    CorruptFileError,
    IndexBuildError,
    format_error_response,
    is_client_error,
    ErrorContext
)

__all__ = [
    'GloranError',
    'ConfigError',
    'InvalidRangeError',
    'ValueTooLargeError',
    'TraceParseError',
    'StorageError',
    'CorruptFileError',
    'IndexBuildError',
    'format_error_response',
    'is_client_error',
    'ErrorContext'
]
