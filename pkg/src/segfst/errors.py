"""Exception hierarchy shared across the package."""

from __future__ import annotations


class SegfstError(Exception):
    """Base class for all errors raised by segfst."""


class EmptyInput(SegfstError, ValueError):
    pass


class AlphabetMismatch(SegfstError, ValueError):
    pass


class CompositionError(SegfstError, ValueError):
    """Raised when composition would need a full epsilon filter."""


class NotAcyclic(SegfstError, ValueError):
    pass


class InvalidState(SegfstError, IndexError):
    pass


class LengthMismatch(SegfstError, ValueError):
    pass


class InvalidSpec(SegfstError, ValueError):
    pass


class NotWellformed(SegfstError, ValueError):
    """Generated output does not reproduce the input with valid delimiters.

    ``reason`` is one of ``REASONS``.
    """

    REASONS = (
        "token-mismatch",
        "double-delimiter",
        "leading-delimiter",
        "trailing-delimiter",
        "length-mismatch",
    )

    def __init__(self, reason: str, detail: str = "") -> None:
        if reason not in self.REASONS:
            raise ValueError(f"unknown wellformedness reason {reason!r}")
        self.reason = reason
        self.detail = detail
        super().__init__(f"{reason}: {detail}" if detail else reason)


class ScorerUnavailable(SegfstError, RuntimeError):
    """An external scorer timed out, died, or violated the wire protocol."""
