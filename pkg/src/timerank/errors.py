"""Exception types shared across the package."""


class DataError(ValueError):
    """A dataset file or configuration file violates the expected schema."""


class NumericalError(ValueError):
    """A NaN or Inf showed up where finite numbers are required."""
