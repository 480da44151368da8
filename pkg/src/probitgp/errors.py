"""Failure types shared across the package."""


class NumericsError(RuntimeError):
    """A numeric routine produced a non-finite or inconsistent state."""


class FactorizationError(NumericsError):
    """A Cholesky factorization failed after all jitter escalation."""
