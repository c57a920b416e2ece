"""Exception types raised by the estimation pipeline."""


class DeconvarError(Exception):
    """Base class for all package errors."""


class UnsupportedCombinationError(DeconvarError, ValueError):
    """A weight/product/error combination has no implementation."""


class DegenerateDesignError(DeconvarError):
    """Normal equations are (numerically) singular for the given series."""


class DivergenceError(DeconvarError):
    """A simulated chain left the bounded range, signalling a non-contracting map."""


class NumericError(DeconvarError):
    """Non-finite values met during numerical Fourier inversion."""
