"""Exception types shared across the toolkit."""


class FactorPriceError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(FactorPriceError, ValueError):
    """Invalid argument, model parameter, or input file."""


class NumericError(FactorPriceError, RuntimeError):
    """A numerical routine failed; carries diagnostic residuals when available."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals
