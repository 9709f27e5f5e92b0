"""Exception hierarchy shared by every tppforge module."""

from __future__ import annotations


class TppForgeError(Exception):
    """Base class for all tppforge errors."""


class InvalidAction(TppForgeError):
    """Semidirect-product parameters do not define a group action."""


class TableInvalid(TppForgeError):
    """A Cayley table violates one of the group axioms."""


class CapExceeded(TppForgeError):
    """Group order exceeds the configured cap."""


class EmptySet(TppForgeError):
    """An operation that requires non-empty subsets received an empty one."""


class NotASubgroup(TppForgeError):
    pass


class NotNormal(TppForgeError):
    pass


class NotAbelian(TppForgeError):
    pass


class NotATppTriple(TppForgeError):
    pass


class SearchNotExhausted(TppForgeError):
    """A check needs an exact capacity but the search was budget-truncated."""


class TheoremViolation(TppForgeError):
    """An exact capacity exceeds the proven subgroup bound.

    This can only mean an implementation bug (or a counterexample to a
    theorem), so batch runs abort on it.
    """


class ParseError(TppForgeError):
    def __init__(self, message: str, text: str = "", position: int = 0, expected: tuple[str, ...] = ()):
        self.text = text
        self.position = position
        self.expected = expected
        detail = message
        if text:
            detail += f" at position {position} in {text!r}"
        if expected:
            detail += f"; expected one of: {', '.join(expected)}"
        super().__init__(detail)
