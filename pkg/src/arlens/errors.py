"""Shared exception hierarchy."""


class ArlensError(Exception):
    """Base class for all engine errors."""


class InputError(ArlensError):
    """Malformed user-supplied input (files, commands, messages)."""


class RuntimeFailure(ArlensError):
    """A pipeline stage failed at runtime on otherwise valid input."""
