"""Exception types raised by the toolkit."""


class ToriError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(ToriError, ValueError):
    """Invalid grid, resolution or run configuration."""


class DomainError(ToriError, ValueError):
    """A parameter lies outside the domain of a constructor or operation."""


class DimensionError(ToriError, ValueError):
    """Fields defined on different grids were combined."""


class ParseError(ToriError, ValueError):
    """Malformed immersion file."""


class DegeneracyError(ToriError, ArithmeticError):
    """Degenerate metric, wedge product or geometry."""


class ConsistencyError(ToriError, ValueError):
    """An immersion claims to be conformal but is not."""


class ContractError(ToriError, ValueError):
    """An operation was called outside its precondition."""


class SingularSystemError(ToriError, ArithmeticError):
    """A linear system that should be invertible is (numerically) singular."""


class FamilyConstructionError(ToriError, RuntimeError):
    """The perturbation family could not be built (e.g. Newton failed)."""
