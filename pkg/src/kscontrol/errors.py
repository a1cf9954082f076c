"""Exception types shared across the package."""

__all__ = ["ValidationError", "DominanceBreakdownError", "OptimizationError"]


class ValidationError(ValueError):
    """An input violates a documented precondition or type invariant."""


class DominanceBreakdownError(ArithmeticError):
    """Pivot loss in a tridiagonal elimination.

    The per-step systems are diagonally dominant M-matrices by construction,
    so this error always indicates an assembly bug, never bad data.
    """


class OptimizationError(RuntimeError):
    """A solver failure or non-finite cost inside the descent loop."""
