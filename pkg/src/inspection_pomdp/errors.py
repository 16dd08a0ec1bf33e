"""Exception hierarchy shared by all modules."""


class InspectionModelError(Exception):
    """Base class for every error raised by this package."""


class CategoryError(InspectionModelError, ValueError):
    """A belief is in the wrong category for the requested operation."""


class DegenerateUpdateError(InspectionModelError, ArithmeticError):
    """The no-report observation has zero probability under the belief."""


class DivergenceError(InspectionModelError, ArithmeticError):
    """An operational state cannot reach a disruptive state."""


class AlphaUndefinedError(InspectionModelError, ValueError):
    """Penalty ratios were requested while the inspection-closure penalty is zero."""


class PenaltyError(InspectionModelError, ValueError):
    """Penalty parameters violate ``0 <= c_tilde <= c <= d``."""


class PlanDomainError(InspectionModelError, ValueError):
    """A conditional plan waits beyond the governing horizon."""


class CapError(InspectionModelError, ValueError):
    """A closed-form or enumeration request exceeds the configured depth cap."""


class NoEarlierPeriodError(InspectionModelError, ValueError):
    """There is no earlier inspection period to shift to."""


class SimulationCapError(InspectionModelError, RuntimeError):
    """A sampled trajectory did not absorb within ``max_steps``."""


class ConfigError(InspectionModelError, ValueError):
    """A run configuration could not be parsed or failed validation."""
