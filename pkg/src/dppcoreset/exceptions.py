"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument is out of its documented domain (bad shape, sign, range)."""


class DegenerateDataError(ValueError):
    """The data admits no meaningful answer (e.g. all points identical)."""


class NumericalDegeneracyError(ArithmeticError):
    """A computation lost too much numerical rank or probability mass.

    Typically raised when the feature matrix has numerical rank below the
    requested sample size, or when a sampler runs out of selection mass.
    """


class ConfigurationError(ValueError):
    """Invalid or inconsistent experiment/CLI configuration."""


class CsvFormatError(ValueError):
    """Malformed CSV input; carries a 1-based row/column location."""

    def __init__(self, message, row=None, column=None):
        loc = ""
        if row is not None:
            loc = f" (row {row}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + loc)
        self.row = row
        self.column = column
