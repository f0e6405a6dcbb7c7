"""Exception types shared across the package."""


class ConfigurationError(Exception):
    """A request that is structurally invalid (bad sizes, caps exceeded, ...)."""


class CompositionError(ValueError):
    """Two objects cannot be composed (shape, grid, or time mismatch)."""


class NumericsError(RuntimeError):
    """A numerical failure: blow-up, non-finite values, failed factorization."""


class NonPositiveDefiniteError(NumericsError):
    """Cholesky failed; ``minor_index`` is the order of the offending leading minor."""

    def __init__(self, minor_index: int, message: str | None = None):
        self.minor_index = minor_index
        super().__init__(
            message or f"covariance matrix not positive definite "
            f"(leading minor of order {minor_index})"
        )
