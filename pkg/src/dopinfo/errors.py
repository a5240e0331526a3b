class DomainError(ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class DegenerateError(ArithmeticError):
    """A normalizing quantity vanished (outcome of zero probability, zero gain)."""
