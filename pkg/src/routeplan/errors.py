"""Exception types shared across the planner."""


class PlannerError(Exception):
    """Base class for all planner errors."""


class ValidationError(PlannerError, ValueError):
    """Input data violates a documented invariant."""


class ConfigurationError(PlannerError, KeyError):
    """A required file, column, profile or table entry is missing."""

    def __str__(self):
        # KeyError quotes its message by default
        return str(self.args[0]) if self.args else ""
