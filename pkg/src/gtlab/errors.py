"""Shared exception types.

Invalid arguments raise the builtin ``ValueError``; the classes here cover
the two conditions that need to be told apart by callers (HTTP handlers map
them to 409, the CLI to exit code 1).
"""


class ConflictError(Exception):
    """An operation collided with state that already exists."""


class DuplicateResponseError(ConflictError):
    """A trial that already has a recorded response was answered again."""


class SessionStateError(Exception):
    """An operation was attempted in the wrong session lifecycle state."""


class UserError(Exception):
    """A user-facing CLI error (maps to exit code 1)."""
