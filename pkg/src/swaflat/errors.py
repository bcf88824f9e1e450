"""Exception hierarchy shared by the library and the CLI.

Every error carries the process exit code the CLI reports for it:
2 for configuration problems, 3 for numeric failures, 4 for I/O.
"""


class SwaflatError(Exception):
    """Base class for all swaflat errors."""

    exit_code: int = 1

    def __init__(self, message: str, *, exit_code: int | None = None) -> None:
        super().__init__(message)
        if exit_code is not None:
            self.exit_code = exit_code


class ConfigError(SwaflatError):
    """Invalid, unknown or inconsistent configuration."""

    exit_code = 2

    def __init__(self, message: str, *, key: str | None = None) -> None:
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


class BudgetError(ConfigError):
    """The step budget cannot satisfy the averaging policy."""


class ScheduleRangeError(SwaflatError, ValueError):
    """A learning rate was requested for a step outside 1..N."""

    exit_code = 2


class NumericError(SwaflatError):
    """A computation produced a non-finite value."""

    exit_code = 3

    def __init__(self, message: str, *, location: str) -> None:
        super().__init__(f"{message} (at {location})")
        self.location = location


class LayoutError(SwaflatError):
    """Two parameter vectors do not share a group layout, or a group is unknown."""

    exit_code = 3


class DataError(SwaflatError):
    """A dataset could not be built or parsed."""

    exit_code = 2

    def __init__(
        self,
        message: str,
        *,
        row: int | None = None,
        column: int | None = None,
        exit_code: int | None = None,
    ) -> None:
        if row is not None and column is not None:
            message = f"{message} (row {row}, column {column})"
        super().__init__(message, exit_code=exit_code)
        self.row = row
        self.column = column


class CheckpointError(SwaflatError):
    """A checkpoint file is missing, corrupt or incompatible."""

    exit_code = 4
