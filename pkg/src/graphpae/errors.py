"""Exception hierarchy shared across the package."""


class GraphPAEError(Exception):
    """Base class for all package-specific errors."""


class ParseError(GraphPAEError):
    """Malformed input file; message names the offending line."""


class DataError(GraphPAEError):
    """Input data violates an invariant (NaN features, bad indices, ...)."""


class ArgumentError(GraphPAEError):
    """Invalid argument or configuration value."""


class ShapeError(GraphPAEError):
    """Operand shapes are incompatible."""


class ContractError(GraphPAEError):
    """An operation was called outside its contract (wrong mode, non-scalar loss)."""


class NumericalError(GraphPAEError):
    """Numerical failure: non-convergence, NaN loss."""
