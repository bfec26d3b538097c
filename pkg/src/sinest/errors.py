"""Exception hierarchy shared by the estimator stack."""


class SinestError(Exception):
    """Base class for all library errors."""


class InsufficientDataError(SinestError, ValueError):
    """Record is too short for the requested window size."""


class InfeasibleScenarioError(SinestError, ValueError):
    """Random scenario generation exhausted its rejection budget."""


class NumericalError(SinestError, ArithmeticError):
    """An iterative kernel failed to converge."""


class SingularSystemError(SinestError, ArithmeticError):
    """Least-squares system is rank deficient beyond tolerance."""


class IllConditionedError(SinestError, ArithmeticError):
    """Frequencies are too close for a well-posed steering matrix."""
