"""Exception hierarchy shared across the toolkit.

Each class carries the process exit code the CLI reports for it.
"""


class HydraError(Exception):
    exit_code = 1


class ConfigurationError(HydraError, ValueError):
    exit_code = 3


class DataError(HydraError, ValueError):
    exit_code = 4


class ShapeError(DataError):
    pass


class SchemaError(DataError):
    pass


class ParseError(DataError):
    pass


class DegenerateFeatureError(DataError):
    pass


class UndefinedVarianceError(DataError):
    pass


class IntegrityError(DataError):
    pass


class DivergenceError(HydraError, ArithmeticError):
    exit_code = 5

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


class CapacityError(HydraError, ValueError):
    exit_code = 3


class QubitIndexError(HydraError, IndexError):
    exit_code = 3
