"""Exception taxonomy and process exit codes.

Exit codes are part of the CLI contract: 0 success, 2 usage errors,
3 data/input errors, 4 numerical failures.
"""

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


class PmimError(Exception):
    """Base class for all library errors."""

    exit_code = EXIT_DATA


class UsageError(PmimError):
    """Invalid parameters or argument combinations."""

    exit_code = EXIT_USAGE


class DataError(PmimError):
    """Malformed, non-finite, or dimensionally inconsistent input data."""

    exit_code = EXIT_DATA


class NumericalError(PmimError):
    """Eigensolver failures and other numerical breakdowns."""

    exit_code = EXIT_NUMERICAL


class ModelFormatError(DataError):
    """Corrupt, truncated, or version-incompatible model files."""
