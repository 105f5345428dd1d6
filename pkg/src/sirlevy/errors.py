"""Exception types used across the package."""


class SirLevyError(Exception):
    """Base class for all sirlevy errors."""


class InvalidMeasure(SirLevyError):
    """Jump measure violates a structural requirement (mass, marks, weights)."""


class NonFiniteIntegrand(SirLevyError):
    """Integrand evaluated to a non-finite value at a mark."""


class NonpositiveChi2(SirLevyError):
    """Second-moment drift margin chi2(p) is not positive for the given p."""


class NonpositiveChi3(SirLevyError):
    """Quadratic-average margin chi3 is not positive; R0s is undefined."""


class StepSizeTooLarge(SirLevyError):
    """Deterministic step drove a compartment negative; reduce dt."""


class NumericalBlowup(SirLevyError):
    """A simulated component exceeded the ceiling or became non-finite."""

    def __init__(self, message, t=None, path_id=None):
        super().__init__(message)
        self.t = t
        self.path_id = path_id


class EmptyTrajectory(SirLevyError):
    """Trajectory has too few recorded points for the requested statistic."""


class TooFewSamples(SirLevyError):
    """Not enough samples for a distribution estimate."""


class AssumptionViolated(SirLevyError):
    """A moment assumption needed by the requested check does not hold."""


class ConfigError(SirLevyError):
    """Scenario configuration is invalid; carries all collected messages."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
