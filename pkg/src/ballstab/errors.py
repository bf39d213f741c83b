"""Exception and warning types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class ConsistencyWarning(UserWarning):
    """Two independent evaluations of the same quantity disagree."""
