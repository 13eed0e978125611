"""Exception types raised across the package."""


class TFPError(Exception):
    """Base class for all errors raised by tfpdecode."""


class ShapeError(TFPError, ValueError):
    pass


class DomainError(TFPError, ValueError):
    """Input violates a mathematical precondition (negative weights, asymmetry...)."""


class ParameterError(TFPError, ValueError):
    pass


class ParseError(TFPError, ValueError):
    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class RangeError(TFPError, ValueError):
    pass


class FormatError(TFPError, ValueError):
    pass


class DataError(TFPError, ValueError):
    pass


class OneToOneError(TFPError, ValueError):
    """An alignment file maps some entity more than once."""


class SingularSystemError(TFPError, ArithmeticError):
    """A connected component carries no seed, so the boundary problem is ill-posed."""

    def __init__(self, message, component=None, nodes=None):
        self.component = component
        self.nodes = nodes
        super().__init__(message)


class NumericError(TFPError, ArithmeticError):
    def __init__(self, message, stage=None):
        self.stage = stage
        super().__init__(f"[{stage}] {message}" if stage else message)


class UndefinedResultError(TFPError, ValueError):
    pass
