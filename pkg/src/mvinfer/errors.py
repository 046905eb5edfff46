"""Exception types shared across the package."""


class MvinferError(Exception):
    """Base class for all errors raised by mvinfer."""


class DesignError(MvinferError):
    """Formula, layout or option problem: the requested analysis is not well posed."""


class DataError(MvinferError):
    """Input data violates the model contract (duplicates, incomplete subjects, ...)."""
