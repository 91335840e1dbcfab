"""
Error handling utilities for gloran.

This module provides:
- Custom exception classes for the storage engine and bench harness
- Error response formatting for the HTTP layer
- A context manager that logs failures and wraps device errors
- Logging configuration shared by every module
"""

import logging
import os
from typing import Any, Dict, Optional

# Configure logging
logging.basicConfig(
    level=os.getenv("GLORAN_LOG_LEVEL", "INFO").upper(),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)

logger = logging.getLogger(__name__)


# Custom Exception Classes

class GloranError(Exception):
    """Base exception for all gloran errors."""
    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}


class ConfigError(GloranError):
    """Raised when a configuration, workload spec or parameter file is invalid."""
    pass


class InvalidRangeError(GloranError):
    """Raised when a key range is empty, inverted or outside the universe."""
    pass


class ValueTooLargeError(GloranError):
    """Raised when a value does not fit in the fixed entry slot."""
    pass


class TraceParseError(GloranError):
    """Raised when a trace line cannot be parsed."""

    def __init__(self, message: str, line: int, details: Optional[Dict[str, Any]] = None):
        details = dict(details or {})
        details["line"] = line
        super().__init__(f"line {line}: {message}", details)
        self.line = line


class StorageError(GloranError):
    """Raised when the block device fails. Fatal for the operation."""
    pass


class CorruptFileError(StorageError):
    """Raised when a store file has a bad magic number or is truncated."""
    pass


class IndexBuildError(GloranError):
    """Raised when DR-tree input is not sorted and key-disjoint."""
    pass


# Error Response Formatting

def format_error_response(
    error: Exception,
    include_details: bool = False
) -> Dict[str, Any]:
    """
    Format an error into a standardized response.

    Args:
        error: The exception to format
        include_details: Whether to include technical details

    Returns:
        Dictionary with error information
    """
    response = {
        "success": False,
        "error_type": type(error).__name__
    }

    if isinstance(error, GloranError):
        response["message"] = error.message
        if include_details and error.details:
            response["details"] = error.details
    else:
        response["message"] = "An unexpected error occurred."

    return response


def is_client_error(error: GloranError) -> bool:
    """Whether an error was caused by the request rather than the store."""
    return isinstance(error, (InvalidRangeError, ValueTooLargeError, ConfigError))


# Context Manager for Error Handling

class ErrorContext:
    """
    Context manager that logs failures and turns OSError into StorageError.

    Example:
        with ErrorContext("write run", path=path):
            path.write_bytes(payload)
    """

    def __init__(self, operation_name: str, path: Optional[os.PathLike] = None, log_errors: bool = True):
        self.operation_name = operation_name
        self.path = path
        self.log_errors = log_errors

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if exc_type is None:
            return False

        if self.log_errors:
            logger.error(
                f"Error in {self.operation_name}: {exc_type.__name__}: {exc_val}"
            )

        if issubclass(exc_type, OSError):
            details = {"operation": self.operation_name}
            if self.path is not None:
                details["path"] = str(self.path)
            raise StorageError(f"{self.operation_name} failed: {exc_val}", details) from exc_val

        return False  # Don't suppress the exception
