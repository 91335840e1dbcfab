"""
Tests for error handling utilities.

This module tests the exception hierarchy, response formatting and the
ErrorContext wrapper around file operations.
"""

import pytest

from gloran.utils.error_handling import (
    GloranError,
    ConfigError,
    InvalidRangeError,
    ValueTooLargeError,
    TraceParseError,
    StorageError,
    CorruptFileError,
    IndexBuildError,
    ErrorContext,
    format_error_response,
    is_client_error
)


def test_custom_exceptions():
    """Test custom exception classes."""
    error = GloranError("Test error", details={"key": "value"})
    assert error.message == "Test error"
    assert error.details == {"key": "value"}
    assert GloranError("bare").details == {}

    for cls in (ConfigError, InvalidRangeError, ValueTooLargeError, StorageError, IndexBuildError):
        assert isinstance(cls("x"), GloranError)

    corrupt = CorruptFileError("bad magic")
    assert isinstance(corrupt, StorageError)

    print("✓ Custom exceptions work correctly")


def test_trace_parse_error_carries_line():
    """The line number is kept on the error and in its message."""
    error = TraceParseError("unknown operation 'X'", 17)
    assert error.line == 17
    assert error.details["line"] == 17
    assert error.message.startswith("line 17:")


def test_format_error_response():
    """Test error response formatting."""
    error = InvalidRangeError("empty range [5, 5)", details={"lo": 5, "hi": 5})

    response = format_error_response(error)
    assert response["success"] is False
    assert response["error_type"] == "InvalidRangeError"
    assert response["message"] == "empty range [5, 5)"
    assert "details" not in response

    response = format_error_response(error, include_details=True)
    assert response["details"] == {"lo": 5, "hi": 5}

    # Non-gloran errors never leak their text
    response = format_error_response(RuntimeError("secret path /x"), include_details=True)
    assert response["message"] == "An unexpected error occurred."

    print("✓ Error response formatting works correctly")


def test_client_errors():
    """Bad requests are client errors; device failures are not."""
    assert is_client_error(InvalidRangeError("x"))
    assert is_client_error(ValueTooLargeError("x"))
    assert is_client_error(ConfigError("x"))
    assert not is_client_error(StorageError("x"))
    assert not is_client_error(CorruptFileError("x"))


def test_error_context_wraps_os_errors(tmp_path):
    """OSError inside the context becomes StorageError with the path attached."""
    missing = tmp_path / "nope" / "file.bin"
    with pytest.raises(StorageError) as info:
        with ErrorContext("read run", path=missing):
            missing.read_bytes()

    assert info.value.details["operation"] == "read run"
    assert info.value.details["path"] == str(missing)
    assert isinstance(info.value.__cause__, OSError)


def test_error_context_passes_other_errors():
    """Non-OS errors propagate unchanged."""
    with pytest.raises(ValueError):
        with ErrorContext("parse", log_errors=False):
            raise ValueError("boom")

    with ErrorContext("noop") as context:
        pass
    assert context.operation_name == "noop"
