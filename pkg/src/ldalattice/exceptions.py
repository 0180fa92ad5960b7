"""Exception types shared across the package."""


class BudgetExceededError(RuntimeError):
    """An exact enumeration would exceed its configured candidate budget."""


class InvalidConfigError(ValueError):
    """Parameters or inputs violate a documented precondition."""


class ResampleBudgetError(RuntimeError):
    """Rejection sampling gave up before producing a simple graph."""
