"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid system or run configuration."""


class IllConditioned(ArithmeticError):
    """Gram matrix of the estimated channel is numerically singular."""

    def __init__(self, condition: float, threshold: float):
        super().__init__(f"Gram condition number {condition:.3e} exceeds {threshold:.1e}")
        self.condition = condition
        self.threshold = threshold


class NoConvergence(ArithmeticError):
    """An iterative routine hit its iteration cap."""
