"""Exception hierarchy shared by every module of the package."""


class DPError(Exception):
    """Base class for all errors raised by ordered_dp."""


class ContractError(DPError, ValueError):
    """Inputs violate a shape or index-set contract."""


class ParameterError(DPError, ValueError):
    """Model or algorithm parameters are outside their admissible range."""


class FeasibilityError(DPError, ValueError):
    """A policy selects an action outside the feasible set of some state."""


class NumericalDomainError(DPError, ArithmeticError):
    """An operator produced (or was fed) a non-finite or out-of-domain value."""


class DivergenceError(DPError, RuntimeError):
    """Successive iterate distances kept growing; the contraction assumption looks violated."""


class ConvergenceError(DPError, RuntimeError):
    """An iterative routine exhausted its sweep budget."""


class StabilityAssumptionError(DPError, ValueError):
    """A discount drift / stability condition required by a model fails."""


class StructureError(DPError, RuntimeError):
    """A computed object lacks the structure the caller relies on (e.g. a cutoff rule)."""


class EnumerationSizeError(DPError, ValueError):
    """Exhaustive policy enumeration would exceed the configured guard."""
