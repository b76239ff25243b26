"""Exception types shared across the package."""

from __future__ import annotations


class QeforgeError(Exception):
    """Base class for all package-specific errors."""


class ParseError(QeforgeError):
    """Syntax error in an expression string.

    Carries the byte offset of the offending token so front ends can point
    at the exact location.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class SingularityError(QeforgeError):
    """Evaluation hit a singular configuration (division by ~0, log of a
    non-positive value, degenerate metric, ODE blow-up, ...).

    ``point`` and ``where`` are optional context: the evaluation point and a
    human-readable tag (sub-expression span, tensor name, ODE time).
    """

    def __init__(self, message: str, point=None, where: str | None = None):
        parts = [message]
        if where is not None:
            parts.append(f"in {where}")
        if point is not None:
            parts.append(f"at point {tuple(point)}")
        super().__init__(" ".join(parts))
        self.point = None if point is None else tuple(point)
        self.where = where


class DegenerateMetricError(SingularityError):
    """Metric fails the nondegeneracy check at an evaluation point."""


class FrameError(QeforgeError):
    """A frame construction precondition failed (names which one)."""
