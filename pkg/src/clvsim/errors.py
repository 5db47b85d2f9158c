"""Exception types shared across the package."""


class CLVError(Exception):
    """Base class for all errors raised by clvsim."""


class InvalidArgumentError(CLVError, ValueError):
    pass


class DegenerateVariableError(CLVError, ValueError):
    """A variable (column) has zero variance and cannot be standardized."""

    def __init__(self, index, name=None):
        self.index = index
        self.name = name
        label = f"{name!r} (column {index})" if name is not None else f"column {index}"
        super().__init__(f"degenerate variable: {label} has zero variance")


class DegenerateInputError(CLVError, ValueError):
    pass


class DatasetFormatError(InvalidArgumentError):
    pass
